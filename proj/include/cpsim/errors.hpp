#pragma once

#include <stdexcept>
#include <string>

namespace cpsim {

// A configuration input (distribution parameter, weight, grid, config file)
// is malformed or outside its documented range.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// The caller broke an API contract: mismatched vector sizes, resources
// assigned to an unselected vehicle, incompatible ground-truth sets.
struct contract_error : std::logic_error {
    explicit contract_error(const std::string& what) : std::logic_error(what) {}
};

// File or stream failure; message carries the offending path.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace cpsim
