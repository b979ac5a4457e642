#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "erpforge/dsp.hpp"
#include "erpforge/errors.hpp"
#include "erpforge/tensor.hpp"

namespace erpforge::spatial {

// Biosemi 32-channel cap, A1..A32 ordering.
inline const std::vector<std::string>& biosemi32_labels() {
  static const std::vector<std::string> labels = {
      "Fp1", "AF3", "F7",  "F3",  "FC1", "FC5", "T7",  "C3",  "CP1", "CP5", "P7",
      "P3",  "Pz",  "PO3", "O1",  "Oz",  "O2",  "PO4", "P4",  "P8",  "CP6", "CP2",
      "C4",  "T8",  "FC6", "FC2", "F4",  "F8",  "AF4", "Fp2", "Fz",  "Cz"};
  return labels;
}

// 7x5 scalp grid. Cells hold a channel index or kEmpty. Four of the 32
// channels (the frontal-pole sites) have no grid position and pass through
// spatial operators untouched.
class ElectrodeGrid {
 public:
  static constexpr int kRows = 7;
  static constexpr int kCols = 5;
  static constexpr int kEmpty = -1;

  static const std::vector<std::vector<std::string>>& default_rows() {
    static const std::vector<std::vector<std::string>> rows = {
        {"F7", "F3", "Fz", "F4", "F8"},      {"FC5", "FC1", "-", "FC2", "FC6"},
        {"T7", "C3", "Cz", "C4", "T8"},      {"CP5", "CP1", "-", "CP2", "CP6"},
        {"P7", "P3", "Pz", "P4", "P8"},      {"-", "PO3", "-", "PO4", "-"},
        {"-", "O1", "Oz", "O2", "-"}};
    return rows;
  }

  static ElectrodeGrid standard_10_20() { return from_rows(default_rows(), biosemi32_labels()); }

  static ElectrodeGrid from_rows(const std::vector<std::vector<std::string>>& rows,
                                 const std::vector<std::string>& channel_labels) {
    if (rows.size() != kRows) throw InvalidSpec("grid must have 7 rows");
    ElectrodeGrid g;
    g.cells_.fill(kEmpty);
    std::vector<bool> used(channel_labels.size(), false);
    for (int r = 0; r < kRows; ++r) {
      if (rows[static_cast<std::size_t>(r)].size() != kCols) throw InvalidSpec("grid rows must have 5 cells");
      for (int c = 0; c < kCols; ++c) {
        const std::string& label = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (label == "-" || label.empty()) continue;
        const auto it = std::find(channel_labels.begin(), channel_labels.end(), label);
        if (it == channel_labels.end()) throw InvalidSpec("grid label not among channels: " + label);
        const int idx = static_cast<int>(it - channel_labels.begin());
        if (used[static_cast<std::size_t>(idx)]) throw InvalidSpec("electrode assigned twice: " + label);
        used[static_cast<std::size_t>(idx)] = true;
        g.cells_[static_cast<std::size_t>(r * kCols + c)] = idx;
      }
    }
    return g;
  }

  // Text format: 7 lines of 5 whitespace-separated tokens, '-' for empty.
  static ElectrodeGrid from_file(const std::string& path, const std::vector<std::string>& channel_labels) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid file " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::vector<std::string> row;
      std::string tok;
      while (ls >> tok) row.push_back(tok);
      rows.push_back(std::move(row));
    }
    return from_rows(rows, channel_labels);
  }

  int cell(int row, int col) const { return cells_[static_cast<std::size_t>(row * kCols + col)]; }
  bool assigned(int row, int col) const { return cell(row, col) != kEmpty; }

  int assigned_count() const {
    int n = 0;
    for (int v : cells_) n += v != kEmpty;
    return n;
  }

  // Grid position of a channel, if it has one.
  std::optional<std::pair<int, int>> position_of(int channel) const {
    for (int r = 0; r < kRows; ++r)
      for (int c = 0; c < kCols; ++c)
        if (cell(r, c) == channel) return std::make_pair(r, c);
    return std::nullopt;
  }

  // Channel indices of the assigned rook neighbors of a cell.
  std::vector<int> assigned_neighbors(int row, int col) const {
    std::vector<int> out;
    const int dr[4] = {-1, 1, 0, 0};
    const int dc[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
      const int r = row + dr[k], c = col + dc[k];
      if (r < 0 || r >= kRows || c < 0 || c >= kCols) continue;
      if (assigned(r, c)) out.push_back(cell(r, c));
    }
    return out;
  }

 private:
  std::array<int, kRows * kCols> cells_{};
};

// Surface Laplacian: each grid-mapped channel has the mean of its assigned
// rook neighbors subtracted; off-grid channels pass through.
inline dsp::Trial laplacian_apply(const dsp::Trial& trial, const ElectrodeGrid& grid) {
  const int n_ch = trial.data.dim(0);
  const int n_t = trial.data.dim(1);

  dsp::Trial out;
  out.label = trial.label;
  out.data = trial.data;
  for (int r = 0; r < ElectrodeGrid::kRows; ++r) {
    for (int c = 0; c < ElectrodeGrid::kCols; ++c) {
      const int ch = grid.cell(r, c);
      if (ch == ElectrodeGrid::kEmpty) continue;
      if (ch >= n_ch) throw ShapeMismatch("grid references channel beyond trial");
      const auto neighbors = grid.assigned_neighbors(r, c);
      if (neighbors.empty()) continue;
      for (int t = 0; t < n_t; ++t) {
        double acc = 0.0;
        for (int nb : neighbors) acc += trial.data(nb, t);
        out.data(ch, t) = trial.data(ch, t) - static_cast<float>(acc / static_cast<double>(neighbors.size()));
      }
    }
  }
  return out;
}

// Projects a trial onto the grid; empty cells take the mean of their
// assigned rook-neighbor cells (one pass, assigned cells only).
inline Tensor<float> grid_map_interpolate(const dsp::Trial& trial, const ElectrodeGrid& grid) {
  const int n_t = trial.data.dim(1);
  Tensor<float> out({ElectrodeGrid::kRows, ElectrodeGrid::kCols, n_t});
  for (int r = 0; r < ElectrodeGrid::kRows; ++r) {
    for (int c = 0; c < ElectrodeGrid::kCols; ++c) {
      const int ch = grid.cell(r, c);
      if (ch != ElectrodeGrid::kEmpty) {
        if (ch >= trial.data.dim(0)) throw ShapeMismatch("grid references channel beyond trial");
        for (int t = 0; t < n_t; ++t) out(r, c, t) = trial.data(ch, t);
      } else {
        const auto neighbors = grid.assigned_neighbors(r, c);
        for (int t = 0; t < n_t; ++t) {
          double acc = 0.0;
          for (int nb : neighbors) acc += trial.data(nb, t);
          out(r, c, t) = neighbors.empty() ? 0.0f : static_cast<float>(acc / static_cast<double>(neighbors.size()));
        }
      }
    }
  }
  return out;
}

// Row-major flattening of the grid to 35 pseudo-channels.
inline dsp::Trial grid_flatten(const Tensor<float>& grid_tensor, int label = 0) {
  if (grid_tensor.rank() != 3 || grid_tensor.dim(0) != ElectrodeGrid::kRows ||
      grid_tensor.dim(1) != ElectrodeGrid::kCols)
    throw ShapeMismatch("expected 7x5xT grid tensor, got " + shape_str(grid_tensor.shape()));
  dsp::Trial out;
  out.label = label;
  out.data = grid_tensor.reshaped({ElectrodeGrid::kRows * ElectrodeGrid::kCols, grid_tensor.dim(2)});
  return out;
}

inline Tensor<float> grid_unflatten(const Tensor<float>& flat) {
  if (flat.rank() != 2 || flat.dim(0) != ElectrodeGrid::kRows * ElectrodeGrid::kCols)
    throw ShapeMismatch("expected 35xT tensor");
  return flat.reshaped({ElectrodeGrid::kRows, ElectrodeGrid::kCols, flat.dim(1)});
}

// Common spatial patterns: rows of `filters` are generalized eigenvectors of
// (Sigma_1, Sigma_1 + Sigma_0), half from each end of the spectrum.
struct CspModel {
  Tensor<double> filters;           // (n_components, n_channels)
  std::vector<double> eigenvalues;  // parallel to filter rows, descending
  int n_components = 0;

  int n_channels() const { return filters.empty() ? 0 : filters.dim(1); }
};

namespace detail {

inline Eigen::MatrixXd trace_normalized_covariance(const dsp::Trial& trial) {
  const int c = trial.data.dim(0);
  const int t = trial.data.dim(1);
  Eigen::MatrixXd x(c, t);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < t; ++j) x(i, j) = trial.data(i, j);
  Eigen::MatrixXd cov = x * x.transpose();
  const double tr = cov.trace();
  if (!(tr > 0)) throw SingularCovariance("trial has zero variance; cannot normalize covariance");
  return cov / tr;
}

}  // namespace detail

inline CspModel csp_fit(const std::vector<dsp::Trial>& trials, int n_components = 6) {
  if (n_components < 2 || n_components % 2 != 0)
    throw InvalidSpec("n_components must be even and >= 2");
  if (trials.empty()) throw MissingClass("no trials");
  const int n_ch = trials.front().data.dim(0);
  if (n_components > n_ch) throw InvalidSpec("more components than channels");

  Eigen::MatrixXd cov1 = Eigen::MatrixXd::Zero(n_ch, n_ch);
  Eigen::MatrixXd cov0 = Eigen::MatrixXd::Zero(n_ch, n_ch);
  int n1 = 0, n0 = 0;
  for (const auto& trial : trials) {
    if (trial.data.dim(0) != n_ch) throw ShapeMismatch("trials disagree on channel count");
    if (trial.label == 1) {
      cov1 += detail::trace_normalized_covariance(trial);
      ++n1;
    } else {
      cov0 += detail::trace_normalized_covariance(trial);
      ++n0;
    }
  }
  if (n1 == 0 || n0 == 0) throw MissingClass("both classes must be present to fit CSP");
  cov1 /= n1;
  cov0 /= n0;

  Eigen::MatrixXd composite = cov1 + cov0;
  const double ridge = 1e-10 * composite.trace() / n_ch;
  composite += ridge * Eigen::MatrixXd::Identity(n_ch, n_ch);

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov1, composite);
  if (solver.info() != Eigen::Success)
    throw SingularCovariance("composite covariance is not positive definite");

  // eigenvalues ascending; take n/2 from each end, ordered descending
  std::vector<int> picks;
  for (int i = 0; i < n_components / 2; ++i) picks.push_back(n_ch - 1 - i);
  for (int i = n_components / 2 - 1; i >= 0; --i) picks.push_back(i);

  CspModel model;
  model.n_components = n_components;
  model.filters = Tensor<double>({n_components, n_ch});
  for (int row = 0; row < n_components; ++row) {
    const int k = picks[static_cast<std::size_t>(row)];
    Eigen::VectorXd v = solver.eigenvectors().col(k);
    v.normalize();
    // sign convention: the entry of largest magnitude is positive
    int arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    for (int j = 0; j < n_ch; ++j) model.filters(row, j) = v(j);
    model.eigenvalues.push_back(solver.eigenvalues()(k));
  }
  return model;
}

inline dsp::Trial csp_transform(const CspModel& model, const dsp::Trial& trial) {
  const int n_ch = trial.data.dim(0);
  const int n_t = trial.data.dim(1);
  if (n_ch != model.n_channels())
    throw ShapeMismatch("trial has " + std::to_string(n_ch) + " channels; CSP model expects " +
                        std::to_string(model.n_channels()));
  dsp::Trial out;
  out.label = trial.label;
  out.data = Tensor<float>({model.n_components, n_t});
  for (int r = 0; r < model.n_components; ++r) {
    for (int t = 0; t < n_t; ++t) {
      double acc = 0.0;
      for (int c = 0; c < n_ch; ++c) acc += model.filters(r, c) * trial.data(c, t);
      out.data(r, t) = static_cast<float>(acc);
    }
  }
  return out;
}

// Versioned binary (little-endian): magic "CSPM", u8 version, u32 rows,
// u32 cols, filters row-major f64, eigenvalues f64.
inline void save_csp(const CspModel& model, std::ostream& out) {
  out.write("CSPM", 4);
  const unsigned char version = 1;
  out.write(reinterpret_cast<const char*>(&version), 1);
  const std::uint32_t rows = static_cast<std::uint32_t>(model.n_components);
  const std::uint32_t cols = static_cast<std::uint32_t>(model.n_channels());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  out.write(reinterpret_cast<const char*>(model.filters.data()),
            static_cast<std::streamsize>(sizeof(double) * model.filters.size()));
  out.write(reinterpret_cast<const char*>(model.eigenvalues.data()),
            static_cast<std::streamsize>(sizeof(double) * model.eigenvalues.size()));
}

inline CspModel load_csp(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "CSPM") throw IoError("not a CSP model file");
  unsigned char version = 0;
  in.read(reinterpret_cast<char*>(&version), 1);
  if (version != 1) throw IoError("unsupported CSP model version");
  std::uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  CspModel model;
  model.n_components = static_cast<int>(rows);
  model.filters = Tensor<double>({static_cast<int>(rows), static_cast<int>(cols)});
  in.read(reinterpret_cast<char*>(model.filters.data()),
          static_cast<std::streamsize>(sizeof(double) * model.filters.size()));
  model.eigenvalues.resize(rows);
  in.read(reinterpret_cast<char*>(model.eigenvalues.data()),
          static_cast<std::streamsize>(sizeof(double) * rows));
  if (!in) throw IoError("truncated CSP model file");
  return model;
}

}  // namespace erpforge::spatial
