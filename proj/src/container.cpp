#include "dkrrt/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "dkrrt/error.hpp"

namespace dkrrt {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'D', 'K', 'R', 'C'};

template <typename T>
void put_raw(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get_raw(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw Error(ErrorKind::Format, "truncated container");
  return value;
}

std::string get_string(std::istream& is, std::uint32_t len) {
  std::string s(len, '\0');
  is.read(s.data(), len);
  if (!is) throw Error(ErrorKind::Format, "truncated container string");
  return s;
}

bool bit_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace

const Container::Value& Container::at(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw Error(ErrorKind::Format, "missing container key '" + key + "'");
  return it->second;
}

const MatrixXd& Container::matrix(const std::string& key) const {
  const auto* m = std::get_if<MatrixXd>(&at(key));
  if (!m) throw Error(ErrorKind::Format, "key '" + key + "' is not a matrix");
  return *m;
}

VectorXd Container::vector(const std::string& key) const {
  const MatrixXd& m = matrix(key);
  if (m.cols() != 1 && m.size() != 0)
    throw Error(ErrorKind::Format, "key '" + key + "' is not a column vector");
  return m.size() == 0 ? VectorXd() : VectorXd(m.col(0));
}

const std::string& Container::str(const std::string& key) const {
  const auto* s = std::get_if<std::string>(&at(key));
  if (!s) throw Error(ErrorKind::Format, "key '" + key + "' is not a string");
  return *s;
}

double Container::scalar(const std::string& key) const {
  const auto* x = std::get_if<double>(&at(key));
  if (!x) throw Error(ErrorKind::Format, "key '" + key + "' is not a scalar");
  return *x;
}

std::int64_t Container::integer(const std::string& key) const {
  const auto* x = std::get_if<std::int64_t>(&at(key));
  if (!x) throw Error(ErrorKind::Format, "key '" + key + "' is not an integer");
  return *x;
}

Container Container::sub(const std::string& prefix) const {
  Container out;
  const std::string p = prefix + "/";
  for (auto it = entries_.lower_bound(p); it != entries_.end(); ++it) {
    if (it->first.compare(0, p.size(), p) != 0) break;
    out.entries_[it->first.substr(p.size())] = it->second;
  }
  return out;
}

void Container::merge(const std::string& prefix, const Container& other) {
  for (const auto& [k, v] : other.entries_) entries_[prefix + "/" + k] = v;
}

void Container::write(std::ostream& os) const {
  os.write(kMagic, 4);
  put_raw<std::uint32_t>(os, kVersion);
  put_raw<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [key, value] : entries_) {
    put_raw<std::uint32_t>(os, static_cast<std::uint32_t>(key.size()));
    os.write(key.data(), static_cast<std::streamsize>(key.size()));
    if (const auto* m = std::get_if<MatrixXd>(&value)) {
      put_raw<std::uint8_t>(os, 0);
      put_raw<std::uint64_t>(os, static_cast<std::uint64_t>(m->rows()));
      put_raw<std::uint64_t>(os, static_cast<std::uint64_t>(m->cols()));
      for (Index r = 0; r < m->rows(); ++r)
        for (Index c = 0; c < m->cols(); ++c) put_raw<double>(os, (*m)(r, c));
    } else if (const auto* s = std::get_if<std::string>(&value)) {
      put_raw<std::uint8_t>(os, 1);
      put_raw<std::uint32_t>(os, static_cast<std::uint32_t>(s->size()));
      os.write(s->data(), static_cast<std::streamsize>(s->size()));
    } else if (const auto* x = std::get_if<double>(&value)) {
      put_raw<std::uint8_t>(os, 2);
      put_raw<double>(os, *x);
    } else {
      put_raw<std::uint8_t>(os, 3);
      put_raw<std::int64_t>(os, std::get<std::int64_t>(value));
    }
  }
  if (!os) throw Error(ErrorKind::Format, "failed writing container");
}

Container Container::read(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorKind::Format, "bad container magic");
  const auto version = get_raw<std::uint32_t>(is);
  if (version != kVersion)
    throw Error(ErrorKind::Format, "unsupported container version " + std::to_string(version));
  const auto count = get_raw<std::uint32_t>(is);
  Container out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string key = get_string(is, get_raw<std::uint32_t>(is));
    const auto tag = get_raw<std::uint8_t>(is);
    switch (tag) {
      case 0: {
        const auto rows = get_raw<std::uint64_t>(is);
        const auto cols = get_raw<std::uint64_t>(is);
        MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
        for (Index r = 0; r < m.rows(); ++r)
          for (Index c = 0; c < m.cols(); ++c) m(r, c) = get_raw<double>(is);
        out.entries_[key] = std::move(m);
        break;
      }
      case 1:
        out.entries_[key] = get_string(is, get_raw<std::uint32_t>(is));
        break;
      case 2:
        out.entries_[key] = get_raw<double>(is);
        break;
      case 3:
        out.entries_[key] = get_raw<std::int64_t>(is);
        break;
      default:
        throw Error(ErrorKind::Format, "unknown entry tag " + std::to_string(tag));
    }
  }
  return out;
}

void Container::save(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::Format, "cannot open " + path.string() + " for writing");
  write(os);
}

Container Container::load(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Format, "cannot open " + path.string());
  return read(is);
}

bool Container::operator==(const Container& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  for (; a != entries_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.index() != b->second.index()) return false;
    if (const auto* m = std::get_if<MatrixXd>(&a->second)) {
      const auto& n = std::get<MatrixXd>(b->second);
      if (m->rows() != n.rows() || m->cols() != n.cols()) return false;
      for (Index i = 0; i < m->size(); ++i)
        if (!bit_equal(m->data()[i], n.data()[i])) return false;
    } else if (const auto* x = std::get_if<double>(&a->second)) {
      if (!bit_equal(*x, std::get<double>(b->second))) return false;
    } else if (a->second != b->second) {
      return false;
    }
  }
  return true;
}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::EmptyDataset: return "empty dataset";
    case ErrorKind::InvalidInput: return "invalid input";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Unsupported: return "unsupported operation";
    case ErrorKind::Index: return "index error";
    case ErrorKind::Conditioning: return "conditioning error";
    case ErrorKind::HorizonExceeded: return "horizon exceeded";
    case ErrorKind::TrainingDiverged: return "training diverged";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Format: return "format error";
  }
  return "error";
}

}  // namespace dkrrt
