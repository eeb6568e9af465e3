#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "forge/numcore/grad_check.hpp"
#include "forge/numcore/tensor.hpp"

namespace forge::num {

// Text fixture format. One tensor is a shape line followed by its values,
// whitespace separated, row-major:
//
//   2 3
//   1 2 3 4 5 6
//
// A bundle is a sequence of tensors, each optionally preceded by "@name".
// Lines starting with '#' are comments.

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void write_bundle(std::ostream& os, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_bundle(std::istream& is);

Tensor load_tensor(const std::string& path);
std::vector<NamedTensor> load_bundle(const std::string& path);
void save_bundle(const std::string& path, const std::vector<NamedTensor>& tensors);

}  // namespace forge::num
