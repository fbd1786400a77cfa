#pragma once

#include <iosfwd>
#include <string>

#include "ctxrec/domain.hpp"

namespace ctxrec::io {

// Normalized dataset file: JSON with stats, dimension registry, catalog and
// per-session items + context. Serialization is deterministic.
void save_dataset(const Dataset& dataset, std::ostream& out);
Dataset load_dataset(std::istream& in);

void save_dataset_file(const Dataset& dataset, const std::string& path);
Dataset load_dataset_file(const std::string& path);

}  // namespace ctxrec::io
