#include "hessae/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace hessae {

int resolve_thread_count(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for_tasks(int num_tasks, int threads, const std::function<void(int)>& fn) {
    if (num_tasks <= 0) return;
    threads = resolve_thread_count(threads);
    if (threads > num_tasks) threads = num_tasks;

    if (threads <= 1) {
        for (int i = 0; i < num_tasks; ++i) fn(i);
        return;
    }

    std::atomic<int> next{0};
    std::mutex error_mutex;
    int first_failed_task = num_tasks;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            const int task = next.fetch_add(1);
            if (task >= num_tasks) return;
            try {
                fn(task);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (task < first_failed_task) {
                    first_failed_task = task;
                    first_error = std::current_exception();
                }
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace hessae
