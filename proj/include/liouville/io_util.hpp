#pragma once

#include <functional>
#include <string>

namespace liouville {

// Writes via a temp file in the same directory followed by rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Parallelism cap: LIOUVILLE_THREADS if set, else hardware concurrency.
int thread_budget();

// Runs fn(i) for i in [0, n); results must not depend on execution order.
void parallel_for(int n, const std::function<void(int)>& fn);

}  // namespace liouville
