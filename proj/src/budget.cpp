#include "fisherkin/budget.hpp"

#include <atomic>

namespace fisherkin {

namespace {
std::atomic<std::size_t> g_memory_cap{std::size_t{2} * 1024 * 1024 * 1024};
std::atomic<std::size_t> g_max_matrix_dim{4096};
} // namespace

std::size_t memory_cap() { return g_memory_cap.load(); }

void set_memory_cap(std::size_t bytes) { g_memory_cap.store(bytes); }

void require_within_cap(std::size_t bytes, const std::string& what) {
    const std::size_t cap = memory_cap();
    if (bytes > cap) {
        throw budget_error(what + " needs " + std::to_string(bytes) +
                           " bytes, above the memory cap of " + std::to_string(cap));
    }
}

std::size_t max_matrix_dim() { return g_max_matrix_dim.load(); }

void set_max_matrix_dim(std::size_t dim) { g_max_matrix_dim.store(dim); }

} // namespace fisherkin
