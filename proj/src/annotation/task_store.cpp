#include "hoidet/annotation/task_store.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>

#include <fcntl.h>
#include <unistd.h>

#include <json.hpp>

#include "hoidet/text_io.hpp"

namespace hoidet::annotation {
namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

bool is_vowel(char c) { return std::string_view("aeiou").find(c) != std::string_view::npos; }

std::string gerund(std::string verb) {
  if (verb.empty()) return verb;
  const std::size_t n = verb.size();
  if (verb == "be") return "being";
  if (n >= 2 && verb.ends_with("ie")) return verb.substr(0, n - 2) + "ying";
  if (n >= 2 && verb.back() == 'e' && !verb.ends_with("ee") && !verb.ends_with("ye") &&
      !verb.ends_with("oe")) {
    return verb.substr(0, n - 1) + "ing";
  }
  // short consonant-vowel-consonant verbs double the final consonant (sit, hug)
  int vowel_groups = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (is_vowel(verb[i]) && (i == 0 || !is_vowel(verb[i - 1]))) ++vowel_groups;
  }
  if (n >= 3 && vowel_groups == 1 && !is_vowel(verb[n - 1]) && is_vowel(verb[n - 2]) &&
      !is_vowel(verb[n - 3]) && std::string_view("wxy").find(verb.back()) == std::string_view::npos) {
    return verb + verb.back() + "ing";
  }
  return verb + "ing";
}

std::string spaced(std::string s) {
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

ojson box_json(const BBox& b) { return ojson::array({b.x1, b.y1, b.x2, b.y2}); }

BBox json_box(const ojson& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 4) throw ParseError(ctx + ": box must be [x1,y1,x2,y2]");
  std::array<double, 4> v{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number()) throw ParseError(ctx + ": box coordinates must be numbers");
    v[i] = j[i].get<double>();
  }
  return {v[0], v[1], v[2], v[3]};
}

void append_durably(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
  if (fd < 0) throw IoError("cannot open journal " + path.string());
  const std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t w = ::write(fd, data.data() + off, data.size() - off);
    if (w < 0) {
      ::close(fd);
      throw IoError("cannot append to journal " + path.string());
    }
    off += static_cast<std::size_t>(w);
  }
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

std::string_view to_string(TaskState s) {
  switch (s) {
    case TaskState::kOpen: return "open";
    case TaskState::kClaimed: return "claimed";
    case TaskState::kSubmitted: return "submitted";
  }
  return "open";
}

std::string prompt_for(const HOICategory& c) {
  // the first word of a multi-word verb ("sit_on") takes the -ing
  std::string verb = spaced(c.verb);
  const auto space = verb.find(' ');
  verb = gerund(verb.substr(0, space)) + (space == std::string::npos ? "" : verb.substr(space));
  const std::string object = spaced(c.object_category);
  const char* article = !object.empty() && is_vowel(object.front()) ? "an" : "a";
  return "A person " + verb + " " + article + " " + object;
}

void validate_submission(const TaskSubmission& sub, int width, int height) {
  if (sub.annotator.empty()) throw SubmissionRejected("annotator must not be empty");
  if (sub.invisible) {
    if (!sub.human_boxes.empty() || !sub.object_boxes.empty() || !sub.links.empty()) {
      throw SubmissionRejected("invisible submissions must not contain boxes or links");
    }
    return;
  }
  auto check_boxes = [&](const std::vector<BBox>& boxes, const char* side) {
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      const auto& b = boxes[i];
      if (!b.is_valid() || b.x1 < 0 || b.y1 < 0 || b.x2 > width || b.y2 > height) {
        throw SubmissionRejected(std::string(side) + " box " + std::to_string(i) +
                                 " must be non-empty and inside the image");
      }
    }
  };
  if (sub.links.empty()) throw SubmissionRejected("submission needs at least one link or the invisible flag");
  check_boxes(sub.human_boxes, "human");
  check_boxes(sub.object_boxes, "object");
  const auto nh = static_cast<int>(sub.human_boxes.size());
  const auto no = static_cast<int>(sub.object_boxes.size());
  std::set<std::pair<int, int>> seen;
  std::vector<bool> human_used(sub.human_boxes.size(), false);
  std::vector<bool> object_used(sub.object_boxes.size(), false);
  for (const auto& [h, o] : sub.links) {
    if (h < 0 || h >= nh || o < 0 || o >= no) {
      throw SubmissionRejected("link (" + std::to_string(h) + "," + std::to_string(o) +
                               ") index out of range");
    }
    if (!seen.insert({h, o}).second) {
      throw SubmissionRejected("duplicate link (" + std::to_string(h) + "," + std::to_string(o) + ")");
    }
    human_used[static_cast<std::size_t>(h)] = true;
    object_used[static_cast<std::size_t>(o)] = true;
  }
  if (no > 0) {
    for (int i = 0; i < nh; ++i) {
      if (!human_used[static_cast<std::size_t>(i)]) {
        throw SubmissionRejected("human box " + std::to_string(i) + " is not used by any link");
      }
    }
  }
  if (nh > 0) {
    for (int i = 0; i < no; ++i) {
      if (!object_used[static_cast<std::size_t>(i)]) {
        throw SubmissionRejected("object box " + std::to_string(i) + " is not used by any link");
      }
    }
  }
}

Clock system_clock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  };
}

TaskStore::TaskStore(Dataset source, fs::path journal, Clock clock, std::int64_t lease_ms)
    : source_(std::move(source)), journal_(std::move(journal)), clock_(std::move(clock)),
      lease_ms_(lease_ms) {
  if (lease_ms_ <= 0) throw PreconditionError("lease must be positive");
  validate(source_);
  for (std::size_t i = 0; i < source_.annotations.size(); ++i) {
    for (HoiId id : source_.annotations[i].positives) {
      Entry e;
      e.task.task_id = static_cast<int>(entries_.size());
      e.task.image_id = source_.annotations[i].image_id;
      e.task.hoi_id = id;
      e.task.prompt = prompt_for(source_.taxonomy.category(id));
      e.image = i;
      entries_.push_back(std::move(e));
    }
  }
  replay();
}

void TaskStore::replay() {
  if (!fs::exists(journal_)) return;
  const auto lines = text::read_lines(journal_);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    TaskSubmission sub;
    try {
      sub = submission_from_json(lines[i]);
    } catch (const ParseError& e) {
      // a torn final line means the write never completed and was never acknowledged
      if (i + 1 == lines.size()) break;
      throw ParseError(text::where(journal_, i + 1, e.what()));
    }
    if (sub.task_id < 0 || static_cast<std::size_t>(sub.task_id) >= entries_.size()) {
      throw ParseError(text::where(journal_, i + 1, "unknown task id"));
    }
    auto& e = entries_[static_cast<std::size_t>(sub.task_id)];
    const auto& ann = source_.annotations[e.image];
    validate_submission(sub, ann.width, ann.height);
    apply(e, sub);
  }
}

void TaskStore::expire_leases(std::int64_t now) {
  for (auto& e : entries_) {
    if (e.task.state == TaskState::kClaimed && e.task.lease_expiry <= now) {
      e.task.state = TaskState::kOpen;
      e.task.lease_expiry = 0;
    }
  }
}

NextTask TaskStore::next_task(const std::string& annotator) {
  if (annotator.empty()) throw PreconditionError("annotator must not be empty");
  std::lock_guard lock(mutex_);
  const std::int64_t now = clock_();
  expire_leases(now);
  NextTask out;
  for (auto& e : entries_) {
    if (e.task.state != TaskState::kOpen) continue;
    if (!out.task) {
      e.task.state = TaskState::kClaimed;
      e.task.lease_expiry = now + lease_ms_;
      e.holder = annotator;
      out.task = e.task;
    } else {
      ++out.remaining;
    }
  }
  return out;
}

void TaskStore::apply(Entry& e, const TaskSubmission& sub) {
  e.accepted = sub;
  e.holder = sub.annotator;
  e.task.state = TaskState::kSubmitted;
  e.task.lease_expiry = 0;
}

std::size_t TaskStore::submit(const TaskSubmission& sub) {
  std::lock_guard lock(mutex_);
  if (sub.task_id < 0 || static_cast<std::size_t>(sub.task_id) >= entries_.size()) {
    throw UnknownTaskError("unknown task " + std::to_string(sub.task_id));
  }
  auto& e = entries_[static_cast<std::size_t>(sub.task_id)];
  expire_leases(clock_());
  // An expired lease nobody else picked up still belongs to its last holder.
  if (e.holder != sub.annotator) {
    throw ConflictError("task " + std::to_string(sub.task_id) + " is not held by '" +
                        sub.annotator + "'");
  }
  const auto& ann = source_.annotations[e.image];
  validate_submission(sub, ann.width, ann.height);
  append_durably(journal_, submission_to_json(sub));
  apply(e, sub);
  return sub.invisible ? 0 : sub.links.size();
}

Dataset TaskStore::export_dataset() const {
  std::lock_guard lock(mutex_);
  Dataset out;
  out.taxonomy = source_.taxonomy;
  out.split = source_.split;
  out.image_dir = source_.image_dir;
  std::vector<std::vector<const Entry*>> by_image(source_.annotations.size());
  for (const auto& e : entries_) {
    if (e.accepted) by_image[e.image].push_back(&e);
  }
  for (std::size_t i = 0; i < by_image.size(); ++i) {
    if (by_image[i].empty()) continue;
    const auto& src = source_.annotations[i];
    ImageAnnotation ann;
    ann.image_id = src.image_id;
    ann.width = src.width;
    ann.height = src.height;
    for (const Entry* e : by_image[i]) {
      const auto& sub = *e->accepted;
      ann.positives.insert(e->task.hoi_id);
      if (sub.invisible) {
        ann.invisible.insert(e->task.hoi_id);
        continue;
      }
      for (const auto& [h, o] : sub.links) {
        ann.instances.push_back({ann.image_id, e->task.hoi_id,
                                 sub.human_boxes[static_cast<std::size_t>(h)],
                                 sub.object_boxes[static_cast<std::size_t>(o)]});
      }
    }
    out.annotations.push_back(std::move(ann));
  }
  return out;
}

std::string TaskStore::export_annotations() const { return serialize_annotations(export_dataset()); }

Progress TaskStore::progress() const {
  std::lock_guard lock(mutex_);
  const std::int64_t now = clock_();
  Progress p;
  p.total = entries_.size();
  for (const auto& e : entries_) {
    switch (e.task.state) {
      case TaskState::kOpen: ++p.open; break;
      case TaskState::kClaimed:
        if (e.task.lease_expiry <= now) {
          ++p.open;
        } else {
          ++p.claimed;
        }
        break;
      case TaskState::kSubmitted: ++p.submitted; break;
    }
  }
  return p;
}

std::optional<AnnotationTask> TaskStore::task(int task_id) const {
  std::lock_guard lock(mutex_);
  if (task_id < 0 || static_cast<std::size_t>(task_id) >= entries_.size()) return std::nullopt;
  return entries_[static_cast<std::size_t>(task_id)].task;
}

std::string submission_to_json(const TaskSubmission& sub) {
  ojson j;
  j["task_id"] = sub.task_id;
  j["annotator"] = sub.annotator;
  j["human_boxes"] = ojson::array();
  for (const auto& b : sub.human_boxes) j["human_boxes"].push_back(box_json(b));
  j["object_boxes"] = ojson::array();
  for (const auto& b : sub.object_boxes) j["object_boxes"].push_back(box_json(b));
  j["links"] = ojson::array();
  for (const auto& [h, o] : sub.links) j["links"].push_back(ojson::array({h, o}));
  j["invisible"] = sub.invisible;
  return j.dump();
}

TaskSubmission submission_from_json(const std::string& text, std::optional<int> task_id_override) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("submission: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("submission: expected a JSON object");
  TaskSubmission sub;
  auto get = [&](const char* key) -> const ojson& {
    if (!j.contains(key)) throw ParseError(std::string("submission: missing field '") + key + "'");
    return j.at(key);
  };
  if (task_id_override) {
    sub.task_id = *task_id_override;
  } else {
    const auto& t = get("task_id");
    if (!t.is_number_integer()) throw ParseError("submission: task_id must be an integer");
    sub.task_id = t.get<int>();
  }
  const auto& a = get("annotator");
  if (!a.is_string()) throw ParseError("submission: annotator must be a string");
  sub.annotator = a.get<std::string>();
  for (const char* side : {"human_boxes", "object_boxes"}) {
    const ojson empty = ojson::array();
    const auto& arr = j.contains(side) ? j.at(side) : empty;
    if (!arr.is_array()) throw ParseError(std::string("submission: ") + side + " must be an array");
    auto& dst = std::string_view(side) == "human_boxes" ? sub.human_boxes : sub.object_boxes;
    for (const auto& b : arr) dst.push_back(json_box(b, std::string("submission ") + side));
  }
  if (j.contains("links")) {
    const auto& links = j.at("links");
    if (!links.is_array()) throw ParseError("submission: links must be an array");
    for (const auto& l : links) {
      if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer()) {
        throw ParseError("submission: each link must be [human_index, object_index]");
      }
      sub.links.emplace_back(l[0].get<int>(), l[1].get<int>());
    }
  }
  if (j.contains("invisible")) {
    if (!j.at("invisible").is_boolean()) throw ParseError("submission: invisible must be a boolean");
    sub.invisible = j.at("invisible").get<bool>();
  }
  return sub;
}

std::string task_to_json(const AnnotationTask& t) {
  ojson j;
  j["task_id"] = t.task_id;
  j["image_id"] = t.image_id;
  j["hoi_id"] = t.hoi_id;
  j["prompt"] = t.prompt;
  j["state"] = std::string(to_string(t.state));
  j["lease_expiry"] = t.lease_expiry;
  return j.dump();
}

}  // namespace hoidet::annotation
