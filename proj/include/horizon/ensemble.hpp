#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "horizon/grid.hpp"
#include "horizon/parallel.hpp"

namespace horizon {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Brownian levels B_{t_i} for every path, node and dimension. Storage is
// node-major so that a cross-section at one node is contiguous.
class PathEnsemble {
 public:
  PathEnsemble(TimeGrid grid, std::size_t dim, std::size_t n_paths,
               std::uint64_t seed)
      : grid_(grid), dim_(dim), paths_(n_paths), seed_(seed) {
    if (n_paths < 2) throw std::invalid_argument("PathEnsemble: need >= 2 paths");
    if (dim < 1) throw std::invalid_argument("PathEnsemble: need d >= 1");
    levels_.assign((grid_.steps() + 1) * n_paths * dim, 0.0);
  }

  const TimeGrid& grid() const noexcept { return grid_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t paths() const noexcept { return paths_; }
  std::uint64_t seed() const noexcept { return seed_; }

  double level(std::size_t node, std::size_t path, std::size_t k) const {
    return levels_[offset(node, path, k)];
  }
  double& level(std::size_t node, std::size_t path, std::size_t k) {
    return levels_[offset(node, path, k)];
  }

  // B_{t_{node+1}} - B_{t_node}
  double increment(std::size_t node, std::size_t path, std::size_t k) const {
    return level(node + 1, path, k) - level(node, path, k);
  }

  std::span<const double> raw() const noexcept { return levels_; }

  bool operator==(const PathEnsemble& o) const {
    return grid_ == o.grid_ && dim_ == o.dim_ && paths_ == o.paths_ &&
           seed_ == o.seed_ && levels_ == o.levels_;
  }

 private:
  std::size_t offset(std::size_t node, std::size_t path, std::size_t k) const {
    return (node * paths_ + path) * dim_ + k;
  }

  TimeGrid grid_;
  std::size_t dim_;
  std::size_t paths_;
  std::uint64_t seed_;
  std::vector<double> levels_;
};

// Each fixed block of paths draws from its own generator seeded from
// (seed, block), so the ensemble does not depend on the worker count.
inline PathEnsemble simulate(const TimeGrid& grid, std::size_t dim,
                             std::size_t n_paths, std::uint64_t seed,
                             const Executor& exec = Executor{}) {
  PathEnsemble ens(grid, dim, n_paths, seed);
  const double sd = std::sqrt(grid.dt());
  const std::size_t steps = grid.steps();
  exec.for_blocks(block_count(n_paths), [&](std::size_t b) {
    std::mt19937_64 rng(detail::splitmix64(seed ^ detail::splitmix64(b + 1)));
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t lo = b * kPathBlock;
    const std::size_t hi = std::min(n_paths, lo + kPathBlock);
    for (std::size_t p = lo; p < hi; ++p) {
      for (std::size_t i = 0; i < steps; ++i) {
        for (std::size_t k = 0; k < dim; ++k) {
          ens.level(i + 1, p, k) = ens.level(i, p, k) + sd * normal(rng);
        }
      }
    }
  });
  return ens;
}

// ---------------------------------------------------------------------------
// Debug export / import. CSV rows are (path,node,dim,value); the first line
// records the configuration including the seed.

inline void write_csv(const PathEnsemble& ens, std::ostream& os) {
  os.precision(17);
  os << "# seed=" << ens.seed() << " T=" << ens.grid().horizon()
     << " n_steps=" << ens.grid().steps() << " d=" << ens.dim()
     << " n_paths=" << ens.paths() << "\n";
  os << "path,node,dim,value\n";
  for (std::size_t p = 0; p < ens.paths(); ++p) {
    for (std::size_t i = 0; i <= ens.grid().steps(); ++i) {
      for (std::size_t k = 0; k < ens.dim(); ++k) {
        os << p << ',' << i << ',' << k << ',' << ens.level(i, p, k) << '\n';
      }
    }
  }
}

inline PathEnsemble read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# ", 0) != 0) {
    throw std::runtime_error("read_csv: missing configuration line");
  }
  std::uint64_t seed = 0;
  double horizon = 0.0;
  std::size_t steps = 0, dim = 0, paths = 0;
  {
    std::istringstream hs(header.substr(2));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "seed") seed = std::stoull(val);
      else if (key == "T") horizon = std::stod(val);
      else if (key == "n_steps") steps = std::stoul(val);
      else if (key == "d") dim = std::stoul(val);
      else if (key == "n_paths") paths = std::stoul(val);
    }
  }
  PathEnsemble ens(TimeGrid(horizon, steps), dim, paths, seed);
  std::string line;
  std::getline(is, line);  // column header
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t p, i, k;
    double v;
    char c1, c2, c3;
    if (!(ls >> p >> c1 >> i >> c2 >> k >> c3 >> v) || p >= paths || i > steps ||
        k >= dim) {
      throw std::runtime_error("read_csv: malformed row: " + line);
    }
    ens.level(i, p, k) = v;
    ++rows;
  }
  if (rows != paths * (steps + 1) * dim) {
    throw std::runtime_error("read_csv: row count does not match header");
  }
  return ens;
}

namespace detail {
inline constexpr char kEnsembleMagic[8] = {'H', 'R', 'Z', 'E', 'N', 'S', '0', '1'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("read_binary: truncated stream");
  return v;
}
}  // namespace detail

// Native-endian flat dump: magic, seed, T, n_steps, d, n_paths, levels.
inline void write_binary(const PathEnsemble& ens, std::ostream& os) {
  os.write(detail::kEnsembleMagic, sizeof(detail::kEnsembleMagic));
  detail::put<std::uint64_t>(os, ens.seed());
  detail::put<double>(os, ens.grid().horizon());
  detail::put<std::uint64_t>(os, ens.grid().steps());
  detail::put<std::uint64_t>(os, ens.dim());
  detail::put<std::uint64_t>(os, ens.paths());
  const auto raw = ens.raw();
  os.write(reinterpret_cast<const char*>(raw.data()),
           static_cast<std::streamsize>(raw.size() * sizeof(double)));
}

inline PathEnsemble read_binary(std::istream& is) {
  char magic[sizeof(detail::kEnsembleMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, detail::kEnsembleMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("read_binary: bad magic");
  }
  const auto seed = detail::get<std::uint64_t>(is);
  const auto horizon = detail::get<double>(is);
  const auto steps = detail::get<std::uint64_t>(is);
  const auto dim = detail::get<std::uint64_t>(is);
  const auto paths = detail::get<std::uint64_t>(is);
  PathEnsemble ens(TimeGrid(horizon, steps), dim, paths, seed);
  for (std::size_t i = 0; i <= steps; ++i) {
    for (std::size_t p = 0; p < paths; ++p) {
      for (std::size_t k = 0; k < dim; ++k) {
        ens.level(i, p, k) = detail::get<double>(is);
      }
    }
  }
  return ens;
}

}  // namespace horizon
