#pragma once

#include <functional>

namespace hessae {

/// Number of worker threads to use when `requested` is 0 (hardware count).
int resolve_thread_count(int requested);

/// Runs fn(0) .. fn(num_tasks-1) on up to `threads` workers. Tasks must be
/// independent; outputs should go to per-task slots so the result does not
/// depend on scheduling. The first exception (by task index) is rethrown.
void parallel_for_tasks(int num_tasks, int threads, const std::function<void(int)>& fn);

}  // namespace hessae
