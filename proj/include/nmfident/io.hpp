#pragma once

#include "nmfident/core.hpp"

#include <iosfwd>
#include <string>

namespace nmfident::io {

// Matrix Market (coordinate or array, real/integer, general or symmetric) and
// headerless CSV. Writers use 17 significant digits so values round-trip.

Mat read_matrix_market(std::istream& in);
Mat read_csv(std::istream& in);
void write_matrix_market(std::ostream& out, const Mat& m);
void write_csv(std::ostream& out, const Mat& m);

/// Dispatches on the extension: ".mtx" is Matrix Market, anything else CSV.
Mat read_matrix(const std::string& path);
void write_matrix(const std::string& path, const Mat& m);

/// One nonnegative integer token per line; blank lines are skipped.
std::vector<Index> read_tokens(const std::string& path);

/// Shortest decimal string that parses back to exactly `v` (%.17g).
std::string format_double(double v);

}  // namespace nmfident::io
