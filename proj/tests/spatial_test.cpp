#include "erpforge/spatial.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numbers>
#include <random>

#include "oracles.hpp"

namespace spatial = erpforge::spatial;
namespace dsp = erpforge::dsp;
using erpforge::Tensor;

namespace {

int channel_of(const std::string& label) {
  const auto& labels = spatial::biosemi32_labels();
  return static_cast<int>(std::find(labels.begin(), labels.end(), label) - labels.begin());
}

dsp::Trial trial_filled(float v, int label = 0, int n_ch = 32, int n_t = 64) {
  dsp::Trial t;
  t.label = label;
  t.data = Tensor<float>::full({n_ch, n_t}, v);
  return t;
}

TEST(ElectrodeGrid, TableLayoutHas28AssignedAnd7Empty) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  EXPECT_EQ(grid.assigned_count(), 28);
  int empty = 0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 5; ++c) empty += !grid.assigned(r, c);
  EXPECT_EQ(empty, 7);
  // frontal poles are the four channels off the grid
  for (const char* label : {"Fp1", "Fp2", "AF3", "AF4"})
    EXPECT_FALSE(grid.position_of(channel_of(label)).has_value()) << label;
  EXPECT_EQ(grid.cell(2, 2), channel_of("Cz"));
}

TEST(ElectrodeGrid, RejectsDuplicatesAndUnknownLabels) {
  auto rows = spatial::ElectrodeGrid::default_rows();
  rows[6][0] = "Cz";  // duplicate
  EXPECT_THROW(spatial::ElectrodeGrid::from_rows(rows, spatial::biosemi32_labels()), erpforge::InvalidSpec);
  rows[6][0] = "XX9";
  EXPECT_THROW(spatial::ElectrodeGrid::from_rows(rows, spatial::biosemi32_labels()), erpforge::InvalidSpec);
}

TEST(Laplacian, ConstantFieldVanishesOnGridChannels) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  auto out = spatial::laplacian_apply(trial_filled(2.5f), grid);
  for (int ch = 0; ch < 32; ++ch) {
    const bool on_grid = grid.position_of(ch).has_value();
    for (int t = 0; t < 64; ++t) {
      if (on_grid)
        EXPECT_FLOAT_EQ(out.data(ch, t), 0.0f);
      else
        EXPECT_FLOAT_EQ(out.data(ch, t), 2.5f);
    }
  }
}

TEST(Laplacian, CzImpulseSpreadsToNeighbors) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  auto trial = trial_filled(0.0f);
  const int cz = channel_of("Cz");
  for (int t = 0; t < 64; ++t) trial.data(cz, t) = 1.0f;
  auto out = spatial::laplacian_apply(trial, grid);

  EXPECT_FLOAT_EQ(out.data(cz, 0), 1.0f);  // Cz's assigned neighbors are C3, C4 (cells above/below are empty)
  // C3 has 4 assigned neighbors (T7, Cz, FC1, CP1); C4 likewise
  EXPECT_FLOAT_EQ(out.data(channel_of("C3"), 0), -0.25f);
  EXPECT_FLOAT_EQ(out.data(channel_of("C4"), 0), -0.25f);
  // T7 does not border Cz
  EXPECT_FLOAT_EQ(out.data(channel_of("T7"), 0), 0.0f);
}

TEST(Laplacian, CornerElectrodeUsesItsTwoNeighbors) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  dsp::Trial trial = trial_filled(0.0f);
  const int f7 = channel_of("F7"), f3 = channel_of("F3"), fc5 = channel_of("FC5");
  for (int t = 0; t < 64; ++t) {
    trial.data(f7, t) = 5.0f;
    trial.data(f3, t) = 2.0f;
    trial.data(fc5, t) = 4.0f;
  }
  auto out = spatial::laplacian_apply(trial, grid);
  EXPECT_FLOAT_EQ(out.data(f7, 0), 5.0f - 3.0f);  // mean(F3, FC5) = 3
}

TEST(GridInterpolate, ConstantFillsEveryCell) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  auto g = spatial::grid_map_interpolate(trial_filled(1.75f), grid);
  ASSERT_EQ(g.shape(), (erpforge::Shape{7, 5, 64}));
  for (std::int64_t i = 0; i < g.size(); ++i) EXPECT_FLOAT_EQ(g[i], 1.75f);
}

TEST(GridInterpolate, EmptyCellTakesNeighborMean) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  auto trial = trial_filled(0.0f);
  auto set_ch = [&](const char* label, float v) {
    for (int t = 0; t < 64; ++t) trial.data(channel_of(label), t) = v;
  };
  set_ch("FC1", 1.0f);
  set_ch("FC2", 2.0f);
  set_ch("Fz", 3.0f);
  set_ch("Cz", 4.0f);
  set_ch("P7", 8.0f);
  set_ch("PO3", 6.0f);
  auto g = spatial::grid_map_interpolate(trial, grid);
  EXPECT_FLOAT_EQ(g(1, 2, 0), 2.5f);  // row-1 gap between FC1/FC2: mean{FC1,FC2,Fz,Cz}
  EXPECT_FLOAT_EQ(g(5, 0, 0), 7.0f);  // below P7: assigned neighbors are P7 and PO3 only
}

TEST(GridInterpolate, ValuesBoundedByNeighbors) {
  auto grid = spatial::ElectrodeGrid::standard_10_20();
  std::mt19937 rng(21);
  std::normal_distribution<float> g(0.0f, 3.0f);
  dsp::Trial trial = trial_filled(0.0f);
  for (std::int64_t i = 0; i < trial.data.size(); ++i) trial.data[i] = g(rng);
  auto gt = spatial::grid_map_interpolate(trial, grid);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 5; ++c) {
      if (grid.assigned(r, c)) continue;
      const auto nbs = grid.assigned_neighbors(r, c);
      ASSERT_FALSE(nbs.empty());
      for (int t = 0; t < 64; ++t) {
        float lo = trial.data(nbs[0], t), hi = lo;
        for (int nb : nbs) {
          lo = std::min(lo, trial.data(nb, t));
          hi = std::max(hi, trial.data(nb, t));
        }
        EXPECT_GE(gt(r, c, t), lo - 1e-5f);
        EXPECT_LE(gt(r, c, t), hi + 1e-5f);
      }
    }
  }
}

TEST(GridFlatten, RowMajorIndexingAndRoundTrip) {
  Tensor<float> g({7, 5, 4});
  for (std::int64_t i = 0; i < g.size(); ++i) g[i] = static_cast<float>(i);
  auto flat = spatial::grid_flatten(g, 1);
  EXPECT_EQ(flat.data.shape(), (erpforge::Shape{35, 4}));
  EXPECT_EQ(flat.label, 1);
  for (int t = 0; t < 4; ++t) {
    EXPECT_FLOAT_EQ(flat.data(0, t), g(0, 0, t));
    EXPECT_FLOAT_EQ(flat.data(34, t), g(6, 4, t));
  }
  auto back = spatial::grid_unflatten(flat.data);
  for (std::int64_t i = 0; i < g.size(); ++i) EXPECT_FLOAT_EQ(back[i], g[i]);
}

// Trials whose rows are orthogonal sinusoids have exactly diagonal XX^T, so
// class covariances can be pinned analytically.
dsp::Trial sinusoid_trial(double amp0, double amp1, int label) {
  dsp::Trial t;
  t.label = label;
  t.data = Tensor<float>({2, 64});
  for (int i = 0; i < 64; ++i) {
    const double phase = 2.0 * std::numbers::pi * i / 64.0;
    t.data(0, i) = static_cast<float>(amp0 * std::cos(phase));
    t.data(1, i) = static_cast<float>(amp1 * std::sin(phase));
  }
  return t;
}

TEST(CspFit, AxisAlignedTwoChannelProblem) {
  std::vector<dsp::Trial> trials;
  for (int i = 0; i < 4; ++i) {
    trials.push_back(sinusoid_trial(1.0, 0.1, 0));   // class 0: variance mostly channel 0
    trials.push_back(sinusoid_trial(0.1, 1.0, 1));   // class 1: variance mostly channel 1
  }
  auto model = spatial::csp_fit(trials, 2);
  ASSERT_EQ(model.filters.shape(), (erpforge::Shape{2, 2}));
  // first row favors class 1 -> channel 1 axis; second row -> channel 0 axis
  EXPECT_NEAR(std::abs(model.filters(0, 1)), 1.0, 1e-6);
  EXPECT_NEAR(model.filters(0, 0), 0.0, 1e-6);
  EXPECT_NEAR(std::abs(model.filters(1, 0)), 1.0, 1e-6);
  EXPECT_NEAR(model.filters(1, 1), 0.0, 1e-6);
  EXPECT_GT(model.eigenvalues[0], 0.5);
  EXPECT_LT(model.eigenvalues[1], 0.5);
}

std::vector<dsp::Trial> random_trials(int n_per_class, int n_ch, int n_t, unsigned seed,
                                      double class1_boost = 2.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<float> g(0.0f, 1.0f);
  std::vector<dsp::Trial> trials;
  for (int label = 0; label < 2; ++label) {
    for (int i = 0; i < n_per_class; ++i) {
      dsp::Trial t;
      t.label = label;
      t.data = Tensor<float>({n_ch, n_t});
      for (std::int64_t k = 0; k < t.data.size(); ++k) t.data[k] = g(rng);
      if (label == 1)
        for (int s = 0; s < n_t; ++s) t.data(0, s) *= static_cast<float>(class1_boost);
      trials.push_back(std::move(t));
    }
  }
  return trials;
}

TEST(CspFit, IdenticalClassCovariancesGiveHalfEigenvalues) {
  auto trials = random_trials(6, 4, 64, 33, 1.0);
  // mirror the exact same data into both classes
  std::vector<dsp::Trial> sym;
  for (const auto& t : trials) {
    dsp::Trial a = t, b = t;
    a.label = 0;
    b.label = 1;
    sym.push_back(a);
    sym.push_back(b);
  }
  auto model = spatial::csp_fit(sym, 4);
  for (double ev : model.eigenvalues) EXPECT_NEAR(ev, 0.5, 1e-6);
}

TEST(CspFit, EigenvaluesDescendingInUnitInterval) {
  auto model = spatial::csp_fit(random_trials(10, 6, 64, 17), 6);
  for (std::size_t i = 0; i + 1 < model.eigenvalues.size(); ++i)
    EXPECT_GE(model.eigenvalues[i], model.eigenvalues[i + 1]);
  for (double ev : model.eigenvalues) {
    EXPECT_GT(ev, 0.0);
    EXPECT_LT(ev, 1.0);
  }
}

TEST(CspFit, ErrorsOnMissingClassOrZeroTrials) {
  auto trials = random_trials(5, 4, 32, 3);
  trials.erase(std::remove_if(trials.begin(), trials.end(), [](const dsp::Trial& t) { return t.label == 1; }),
               trials.end());
  EXPECT_THROW(spatial::csp_fit(trials, 2), erpforge::MissingClass);

  std::vector<dsp::Trial> with_zero = random_trials(3, 4, 32, 4);
  with_zero.push_back(trial_filled(0.0f, 1, 4, 32));
  EXPECT_THROW(spatial::csp_fit(with_zero, 2), erpforge::SingularCovariance);
}

TEST(CspFit, TrialOrderPermutationKeepsFilters) {
  auto trials = random_trials(8, 5, 48, 8);
  auto model_a = spatial::csp_fit(trials, 4);
  std::mt19937 rng(99);
  std::shuffle(trials.begin(), trials.end(), rng);
  auto model_b = spatial::csp_fit(trials, 4);
  for (std::int64_t i = 0; i < model_a.filters.size(); ++i)
    EXPECT_NEAR(model_a.filters[i], model_b.filters[i], 1e-9);
}

// Re-derive class covariances with plain loops and feed them to the
// independent Jacobi solver; fitted filters must span the same directions.
TEST(CspFit, MatchesGeneralizedEigOracle) {
  const int n_ch = 8;
  auto trials = random_trials(12, n_ch, 64, 55, 3.0);

  std::vector<std::vector<double>> cov1(n_ch, std::vector<double>(n_ch, 0.0));
  std::vector<std::vector<double>> cov0 = cov1;
  int n1 = 0, n0 = 0;
  for (const auto& t : trials) {
    std::vector<std::vector<double>> s(n_ch, std::vector<double>(n_ch, 0.0));
    double tr = 0.0;
    for (int a = 0; a < n_ch; ++a)
      for (int b = 0; b < n_ch; ++b) {
        double acc = 0.0;
        for (int k = 0; k < 64; ++k) acc += double(t.data(a, k)) * double(t.data(b, k));
        s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = acc;
        if (a == b) tr += acc;
      }
    for (auto& row : s)
      for (auto& v : row) v /= tr;
    auto& target = t.label == 1 ? cov1 : cov0;
    (t.label == 1 ? n1 : n0)++;
    for (int a = 0; a < n_ch; ++a)
      for (int b = 0; b < n_ch; ++b) target[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += s[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
  }
  std::vector<std::vector<double>> comp(n_ch, std::vector<double>(n_ch, 0.0));
  double comp_trace = 0.0;
  for (int a = 0; a < n_ch; ++a)
    for (int b = 0; b < n_ch; ++b) {
      cov1[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] /= n1;
      cov0[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] /= n0;
      comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
          cov1[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] + cov0[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
      if (a == b) comp_trace += comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
  for (int a = 0; a < n_ch; ++a) comp[static_cast<std::size_t>(a)][static_cast<std::size_t>(a)] += 1e-10 * comp_trace / n_ch;

  auto eig = oracle::generalized_eig_oracle(cov1, comp);

  auto model = spatial::csp_fit(trials, 4);
  // oracle eigenvalues ascending: rows 0,1 of the model match the top two,
  // rows 2,3 the bottom two
  const std::array<std::size_t, 4> oracle_cols = {static_cast<std::size_t>(n_ch - 1), static_cast<std::size_t>(n_ch - 2), 1, 0};
  for (int row = 0; row < 4; ++row) {
    const auto& v = eig.eigenvectors[oracle_cols[static_cast<std::size_t>(row)]];
    double dot = 0.0, norm_v = 0.0;
    for (int j = 0; j < n_ch; ++j) {
      dot += v[static_cast<std::size_t>(j)] * model.filters(row, j);
      norm_v += v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    }
    const double cosang = std::abs(dot) / std::sqrt(norm_v);  // filter rows are unit norm
    EXPECT_GT(cosang, 1.0 - 1e-9) << "row " << row;
    EXPECT_NEAR(model.eigenvalues[static_cast<std::size_t>(row)],
                eig.eigenvalues[oracle_cols[static_cast<std::size_t>(row)]], 1e-9);
  }
}

TEST(CspTransform, IdentityFiltersExtractChannels) {
  spatial::CspModel model;
  model.n_components = 2;
  model.filters = Tensor<double>({2, 4});
  model.filters(0, 0) = 1.0;
  model.filters(1, 1) = 1.0;
  model.eigenvalues = {0.9, 0.1};

  dsp::Trial t;
  t.label = 1;
  t.data = Tensor<float>({4, 8});
  for (std::int64_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(i);
  auto y = spatial::csp_transform(model, t);
  EXPECT_EQ(y.data.shape(), (erpforge::Shape{2, 8}));
  EXPECT_EQ(y.label, 1);
  for (int s = 0; s < 8; ++s) {
    EXPECT_FLOAT_EQ(y.data(0, s), t.data(0, s));
    EXPECT_FLOAT_EQ(y.data(1, s), t.data(1, s));
  }

  dsp::Trial zero = trial_filled(0.0f, 0, 4, 8);
  auto yz = spatial::csp_transform(model, zero);
  for (std::int64_t i = 0; i < yz.data.size(); ++i) EXPECT_FLOAT_EQ(yz.data[i], 0.0f);

  dsp::Trial bad = trial_filled(0.0f, 0, 5, 8);
  EXPECT_THROW(spatial::csp_transform(model, bad), erpforge::ShapeMismatch);
}

TEST(CspTransform, VarianceOrderingFollowsEigenvalues) {
  auto trials = random_trials(20, 6, 64, 77, 4.0);
  auto model = spatial::csp_fit(trials, 4);
  // average output variance on class-1 trials, per component
  std::vector<double> var(4, 0.0);
  int count = 0;
  for (const auto& t : trials) {
    if (t.label != 1) continue;
    auto y = spatial::csp_transform(model, t);
    for (int rcomp = 0; rcomp < 4; ++rcomp) {
      double acc = 0.0;
      for (int s = 0; s < 64; ++s) acc += double(y.data(rcomp, s)) * double(y.data(rcomp, s));
      var[static_cast<std::size_t>(rcomp)] += acc;
    }
    ++count;
  }
  // first component (largest eigenvalue) captures the boosted channel
  EXPECT_GT(var[0], var[2]);
  EXPECT_GT(var[0], var[3]);
}

TEST(CspModelIo, SaveLoadRoundTrip) {
  auto model = spatial::csp_fit(random_trials(6, 4, 32, 12), 4);
  std::ostringstream out(std::ios::binary);
  spatial::save_csp(model, out);
  std::istringstream in(out.str(), std::ios::binary);
  auto loaded = spatial::load_csp(in);
  EXPECT_EQ(loaded.n_components, model.n_components);
  ASSERT_EQ(loaded.filters.shape(), model.filters.shape());
  for (std::int64_t i = 0; i < model.filters.size(); ++i) EXPECT_EQ(loaded.filters[i], model.filters[i]);
  EXPECT_EQ(loaded.eigenvalues, model.eigenvalues);
}

}  // namespace
