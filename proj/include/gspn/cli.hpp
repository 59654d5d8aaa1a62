#pragma once

#include <string>
#include <vector>

namespace gspn::cli {

// Entry point behind the gspn executable; also callable in-process from
// tests. Returns 0 on success, 1 on usage errors, 2 on data/model errors.
int run(const std::vector<std::string>& args);
int run(int argc, const char* const* argv);

}  // namespace gspn::cli
