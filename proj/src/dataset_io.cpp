#include "lrmr/dataset_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace lrmr {

static_assert(std::endian::native == std::endian::little,
              "dataset format is little-endian; add byte swapping for this host");

namespace {

constexpr std::array<char, 8> kMagic = {'L', 'R', 'M', 'R', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kVersion = 1;

enum class CorruptionTag : std::uint8_t { None = 0, Additive = 1, Missing = 2 };
enum class CovarianceTag : std::uint8_t { Identity = 0, Ar1 = 1, Explicit = 2 };

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  template <typename T>
  void put(T value) {
    os_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  // Row-major, matching the documented layout.
  void put_matrix(const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) put<double>(m(i, j));
    }
  }

  void put_covariance(const Covariance& c) {
    switch (c.kind()) {
      case Covariance::Kind::Identity:
        put(CovarianceTag::Identity);
        put<double>(c.scale());
        break;
      case Covariance::Kind::Ar1:
        put(CovarianceTag::Ar1);
        put<double>(c.phi());
        put<double>(c.scale());
        break;
      case Covariance::Kind::Explicit:
        put(CovarianceTag::Explicit);
        put_matrix(c.dense());
        break;
    }
  }

 private:
  std::ostream& os_;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  template <typename T>
  T get() {
    T value{};
    is_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is_) throw DataError("dataset: unexpected end of file");
    return value;
  }

  std::int64_t get_dim(const char* what) {
    const auto v = get<std::int64_t>();
    if (v < 1 || v > (std::int64_t{1} << 31)) {
      throw DataError(std::string("dataset: invalid ") + what);
    }
    return v;
  }

  Matrix get_matrix(Eigen::Index rows, Eigen::Index cols) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = get<double>();
    }
    return m;
  }

  Covariance get_covariance(Eigen::Index dim) {
    const auto tag = get<CovarianceTag>();
    switch (tag) {
      case CovarianceTag::Identity:
        return Covariance::identity(dim, get<double>());
      case CovarianceTag::Ar1: {
        const double phi = get<double>();
        return Covariance::ar1(dim, phi, get<double>());
      }
      case CovarianceTag::Explicit:
        return Covariance::explicit_matrix(get_matrix(dim, dim));
    }
    throw DataError("dataset: unknown covariance tag");
  }

 private:
  std::istream& is_;
};

}  // namespace

void write_dataset(std::ostream& os, const Dataset& data) {
  const ObservationSet& obs = data.observations;
  obs.validate();
  const Eigen::Index d1 = obs.z.d1;
  const Eigen::Index d2 = obs.z.d2;
  const Eigen::Index n = obs.size();

  Writer w(os);
  os.write(kMagic.data(), kMagic.size());
  w.put<std::uint32_t>(kVersion);
  w.put<std::int64_t>(d1);
  w.put<std::int64_t>(d2);
  w.put<std::int64_t>(n);
  w.put<std::uint64_t>(obs.seed);

  if (const auto* add = std::get_if<AdditiveNoise>(&obs.corruption)) {
    w.put(CorruptionTag::Additive);
    w.put_covariance(add->sigma_w);
  } else if (const auto* mis = std::get_if<MissingData>(&obs.corruption)) {
    w.put(CorruptionTag::Missing);
    w.put<double>(mis->rho);
  } else {
    w.put(CorruptionTag::None);
  }

  w.put<double>(data.sigma_eps);
  w.put_covariance(data.sigma_x);

  w.put<std::uint8_t>(data.truth ? 1 : 0);
  if (data.truth) {
    const TrueModel& t = *data.truth;
    w.put<std::int64_t>(t.rank());
    for (Eigen::Index j = 0; j < t.spectrum.size(); ++j) w.put<double>(t.spectrum(j));
    w.put_matrix(t.theta);
    w.put_matrix(t.u);
    w.put_matrix(t.v);
  }

  for (Eigen::Index i = 0; i < n; ++i) w.put<double>(obs.y(i));
  for (Eigen::Index i = 0; i < n; ++i) w.put_matrix(obs.z.matrix(i));

  if (std::holds_alternative<MissingData>(obs.corruption)) {
    const bool has_mask = obs.mask.size() != 0;
    w.put<std::uint8_t>(has_mask ? 1 : 0);
    if (has_mask) {
      // Row-major per observation, one byte per entry.
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index r = 0; r < d1; ++r) {
          for (Eigen::Index c = 0; c < d2; ++c) {
            w.put<std::uint8_t>(obs.mask(c * d1 + r, i) ? 1 : 0);
          }
        }
      }
    }
  }
  if (!os) throw DataError("dataset: write failed");
}

Dataset read_dataset(std::istream& is) {
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw DataError("dataset: bad magic (not an lrmr dataset)");
  Reader r(is);
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw DataError("dataset: unsupported version " + std::to_string(version));

  const Eigen::Index d1 = r.get_dim("d1");
  const Eigen::Index d2 = r.get_dim("d2");
  const Eigen::Index n = r.get_dim("N");
  const Eigen::Index m = d1 * d2;

  Dataset data;
  ObservationSet& obs = data.observations;
  obs.seed = r.get<std::uint64_t>();

  const auto tag = r.get<CorruptionTag>();
  switch (tag) {
    case CorruptionTag::None:
      obs.corruption = NoCorruption{};
      break;
    case CorruptionTag::Additive:
      obs.corruption = AdditiveNoise{r.get_covariance(m)};
      break;
    case CorruptionTag::Missing:
      obs.corruption = MissingData{r.get<double>()};
      break;
    default:
      throw DataError("dataset: unknown corruption tag");
  }

  data.sigma_eps = r.get<double>();
  data.sigma_x = r.get_covariance(m);

  if (r.get<std::uint8_t>() != 0) {
    const auto rank = r.get_dim("rank");
    TrueModel t;
    t.spectrum.resize(rank);
    for (Eigen::Index j = 0; j < rank; ++j) t.spectrum(j) = r.get<double>();
    t.theta = r.get_matrix(d1, d2);
    t.u = r.get_matrix(d1, rank);
    t.v = r.get_matrix(d2, rank);
    data.truth = std::move(t);
  }

  obs.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) obs.y(i) = r.get<double>();
  obs.z = CovariateStack{d1, d2, Matrix(m, n)};
  for (Eigen::Index i = 0; i < n; ++i) obs.z.columns.col(i) = vec(r.get_matrix(d1, d2));

  if (std::holds_alternative<MissingData>(obs.corruption) && r.get<std::uint8_t>() != 0) {
    obs.mask = MissingMask::Constant(m, n, false);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index row = 0; row < d1; ++row) {
        for (Eigen::Index col = 0; col < d2; ++col) {
          obs.mask(col * d1 + row, i) = r.get<std::uint8_t>() != 0;
        }
      }
    }
  }
  obs.validate();
  return data;
}

void save_dataset(const std::string& path, const Dataset& data) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("dataset: cannot open '" + path + "' for writing");
  write_dataset(os, data);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("dataset: cannot open '" + path + "'");
  return read_dataset(is);
}

}  // namespace lrmr
