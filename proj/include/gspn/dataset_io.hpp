#pragma once

#include <string>

#include "gspn/types.hpp"

namespace gspn {

// Reads a dataset from the JSON format described in the README. Undirected
// edge shorthand is expanded into two opposite directed edges; null
// attribute entries are loaded as masked. Throws ValidationError with file
// and line context on malformed input.
Dataset load_dataset(const std::string& path);

// Writes the dataset back out. Masked entries are emitted as null, so any
// held-out values behind the mask do not survive a save/load cycle.
void save_dataset(const Dataset& ds, const std::string& path);

Dataset parse_dataset(const std::string& text, const std::string& origin = "<string>");
std::string serialize_dataset(const Dataset& ds);

}  // namespace gspn
