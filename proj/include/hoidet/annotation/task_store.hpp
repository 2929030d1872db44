#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hoidet/core_model.hpp"
#include "hoidet/errors.hpp"

namespace hoidet::annotation {

enum class TaskState { kOpen, kClaimed, kSubmitted };

[[nodiscard]] std::string_view to_string(TaskState s);

struct AnnotationTask {
  int task_id = 0;
  std::string image_id;
  HoiId hoi_id = 0;
  std::string prompt;
  TaskState state = TaskState::kOpen;
  std::int64_t lease_expiry = 0;  // ms on the store's clock; 0 when not claimed
};

struct TaskSubmission {
  int task_id = 0;
  std::string annotator;
  std::vector<BBox> human_boxes;
  std::vector<BBox> object_boxes;
  std::vector<std::pair<int, int>> links;  // (human index, object index)
  bool invisible = false;
};

/// Submission broke one of the submission rules; the message names it.
class SubmissionRejected : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The caller no longer holds the task: its lease expired and someone else
/// claimed it, or it never held it.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownTaskError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// "A person riding a bicycle" for (ride, bicycle).
[[nodiscard]] std::string prompt_for(const HOICategory& category);

/// Checks the submission rules against an image of the given size.
void validate_submission(const TaskSubmission& sub, int width, int height);

struct Progress {
  std::size_t total = 0;
  std::size_t open = 0;
  std::size_t claimed = 0;
  std::size_t submitted = 0;
};

struct NextTask {
  std::optional<AnnotationTask> task;
  std::size_t remaining = 0;  // open tasks left after this claim
};

/// Milliseconds on some monotonic scale.
using Clock = std::function<std::int64_t()>;

[[nodiscard]] Clock system_clock();

inline constexpr std::int64_t kDefaultLeaseMs = 30LL * 60 * 1000;

/// One task per (image, positive label) of `source`, in image then label
/// order. Accepted submissions are appended to `journal` (JSON lines) before
/// they take effect and are replayed on construction, so a restart loses
/// nothing that was acknowledged. Claims are leases and are not persisted.
/// Every public member is safe to call concurrently.
class TaskStore {
 public:
  TaskStore(Dataset source, std::filesystem::path journal, Clock clock = system_clock(),
            std::int64_t lease_ms = kDefaultLeaseMs);

  [[nodiscard]] NextTask next_task(const std::string& annotator);

  /// Returns the number of instances recorded. Throws UnknownTaskError,
  /// ConflictError or SubmissionRejected. Resubmitting a task replaces its
  /// earlier instances.
  std::size_t submit(const TaskSubmission& sub);

  /// Images with at least one submitted task, in source order.
  [[nodiscard]] Dataset export_dataset() const;
  [[nodiscard]] std::string export_annotations() const;

  [[nodiscard]] Progress progress() const;
  [[nodiscard]] std::optional<AnnotationTask> task(int task_id) const;
  [[nodiscard]] const Dataset& source() const { return source_; }

 private:
  struct Entry {
    AnnotationTask task;
    std::size_t image = 0;  // index into source_.annotations
    std::string holder;     // last claimant, or the submitter once submitted
    std::optional<TaskSubmission> accepted;
  };

  void expire_leases(std::int64_t now);
  void apply(Entry& e, const TaskSubmission& sub);
  void replay();

  Dataset source_;
  std::filesystem::path journal_;
  Clock clock_;
  std::int64_t lease_ms_;
  std::vector<Entry> entries_;
  mutable std::mutex mutex_;
};

[[nodiscard]] std::string submission_to_json(const TaskSubmission& sub);
/// Throws ParseError on malformed input. `task_id` is taken from the JSON
/// unless `task_id_override` is set (the HTTP route carries it in the path).
[[nodiscard]] TaskSubmission submission_from_json(const std::string& text,
                                                  std::optional<int> task_id_override = {});
[[nodiscard]] std::string task_to_json(const AnnotationTask& task);

}  // namespace hoidet::annotation
