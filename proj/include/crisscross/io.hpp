#pragma once

#include <iosfwd>
#include <string>

#include "crisscross/model.hpp"

namespace crisscross {

// CSV with header x,y,r_x,r_y; missing cells empty; 17 significant digits; LF.
void write_csv(const ObservedDataset& data, std::ostream& out);
void save_dataset(const ObservedDataset& data, const std::string& path);

// Strict reader: every coarsening violation or malformed number is a DataError
// carrying the 1-based line number.
ObservedDataset read_csv(std::istream& in);
ObservedDataset load_dataset(const std::string& path);

std::string format_double(double v);

}  // namespace crisscross
