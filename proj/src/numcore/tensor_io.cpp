#include "forge/numcore/tensor_io.hpp"

#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

#include "forge/error.hpp"

namespace forge::num {

namespace {

// Walks non-comment lines of a fixture stream.
class LineCursor {
 public:
  explicit LineCursor(std::istream& is) : is_(is) {}

  bool next(std::string& line) {
    if (pending_) {
      line = std::move(*pending_);
      pending_.reset();
      return true;
    }
    while (std::getline(is_, line)) {
      ++line_no_;
      auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      line = line.substr(first);
      return true;
    }
    return false;
  }
  void push_back(std::string line) { pending_ = std::move(line); }
  std::size_t line_no() const { return line_no_; }

 private:
  std::istream& is_;
  std::optional<std::string> pending_;
  std::size_t line_no_ = 0;
};

Tensor read_one(LineCursor& cur) {
  std::string line;
  if (!cur.next(line)) throw ParseError("tensor text: missing shape line");
  Shape shape;
  {
    std::istringstream ss(line);
    long long d;
    while (ss >> d) {
      if (d <= 0) throw ParseError("tensor text: non-positive extent on line " + std::to_string(cur.line_no()));
      shape.push_back(static_cast<std::size_t>(d));
    }
    if (!ss.eof() || shape.empty()) throw ParseError("tensor text: bad shape line " + std::to_string(cur.line_no()));
  }
  const std::size_t n = shape_volume(shape);
  std::vector<double> data;
  data.reserve(n);
  while (data.size() < n && cur.next(line)) {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      try {
        std::size_t used = 0;
        data.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ParseError("tensor text: bad value '" + tok + "' on line " + std::to_string(cur.line_no()));
      }
    }
  }
  if (data.size() != n) {
    throw ParseError("tensor text: shape " + shape_to_string(shape) + " needs " + std::to_string(n) +
                     " values, found " + std::to_string(data.size()));
  }
  return Tensor(std::move(shape), std::move(data));
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  for (std::size_t i = 0; i < t.rank(); ++i) os << (i ? " " : "") << t.dim(i);
  os << '\n';
  os << std::setprecision(17);
  const std::size_t row = t.shape().back();
  for (std::size_t i = 0; i < t.size(); ++i) {
    os << t[i] << ((i + 1) % row == 0 ? '\n' : ' ');
  }
}

Tensor read_tensor(std::istream& is) {
  LineCursor cur(is);
  return read_one(cur);
}

void write_bundle(std::ostream& os, const std::vector<NamedTensor>& tensors) {
  for (const auto& t : tensors) {
    os << '@' << t.name << '\n';
    write_tensor(os, t.value);
  }
}

std::vector<NamedTensor> read_bundle(std::istream& is) {
  LineCursor cur(is);
  std::vector<NamedTensor> out;
  std::string line;
  while (cur.next(line)) {
    std::string name;
    if (line.front() == '@') {
      name = line.substr(1);
      while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    } else {
      cur.push_back(line);
      name = "tensor" + std::to_string(out.size());
    }
    out.push_back({name, read_one(cur)});
  }
  return out;
}

Tensor load_tensor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tensor file " + path);
  return read_tensor(in);
}

std::vector<NamedTensor> load_bundle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open tensor bundle " + path);
  return read_bundle(in);
}

void save_bundle(const std::string& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write tensor bundle " + path);
  write_bundle(out, tensors);
}

}  // namespace forge::num
