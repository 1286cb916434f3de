#pragma once

#include <string>
#include <vector>

#include "defersim/types.hpp"

namespace defersim {

struct Dataset {
    GroupMap groups;
    std::vector<Sample> samples;
    size_t dim = 0;

    size_t size() const { return samples.size(); }
};

// Reads the delimited text format: header "id,group,label,f1,..,fn", one row
// per sample. Group names become dense ids (sorted order). Malformed rows
// raise ParseError with the offending line; a header-only or empty file
// raises ConfigError; unreadable paths raise IoError.
Dataset load_dataset(const std::string& path);

// Writes the same format back; feature values keep full double precision.
void save_dataset(const std::string& path, const Dataset& ds);

}  // namespace defersim
