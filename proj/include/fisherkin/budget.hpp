#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fisherkin {

// Error taxonomy; the CLI maps these onto its exit codes.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid parameters, preconditions, or configuration.
struct config_error : error {
    using error::error;
};

// Corrupt or inconsistent density files.
struct format_error : error {
    using error::error;
};

// A computation would exceed the memory or size budget.
struct budget_error : error {
    using error::error;
};

// Process-wide allocation cap for grid-sized buffers (default 2 GiB).
std::size_t memory_cap();
void set_memory_cap(std::size_t bytes);

// Throws budget_error if a single allocation of `bytes` would exceed the cap.
void require_within_cap(std::size_t bytes, const std::string& what);

// Largest admissible density-matrix dimension m^(d*n) (default 4096).
std::size_t max_matrix_dim();
void set_max_matrix_dim(std::size_t dim);

} // namespace fisherkin
