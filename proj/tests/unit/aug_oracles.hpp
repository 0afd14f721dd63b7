#pragma once

// Per-augmentation oracle cases: an identity case, a forced-value case with
// a hand-derived or independently computed expectation, and a shape/range
// contract. Each case returns an empty string on success.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "frofa/augmentations.hpp"
#include "frofa/frofa_core.hpp"
#include "test_support.hpp"

namespace frofa::testing {

struct OracleCase {
  std::string kind;
  std::string name;
  std::function<std::string()> run;
};

namespace oracle_detail {

inline std::string expect(bool ok, const std::string& what) { return ok ? std::string() : what; }

inline std::string close(const FeatureTensor& got, const FeatureTensor& want, double tol, const std::string& what) {
  if (got.tokens() != want.tokens() || got.channels() != want.channels()) return what + ": shape differs";
  const double d = max_abs_diff(got, want);
  if (d > tol) {
    std::ostringstream os;
    os << what << ": max abs diff " << d << " > " << tol;
    return os.str();
  }
  return {};
}

inline FeatureTensor unit_grid(std::size_t n, std::size_t c, std::uint64_t seed) {
  return random_tensor(n, c, seed, 0.0, 1.0);
}

inline bool in_unit(const FeatureTensor& g) {
  return std::all_of(g.values().begin(), g.values().end(), [](float x) { return x >= 0.0f && x <= 1.0f; });
}

inline bool in_range(const FeatureTensor& out, const FeatureTensor& in, NormScope scope = NormScope::per_channel) {
  const auto s = compute_stats(in, scope);
  for (std::size_t n = 0; n < out.tokens(); ++n) {
    for (std::size_t c = 0; c < out.channels(); ++c) {
      const double slack = 1e-5 * (s.max_for(c) - s.min_for(c)) + 1e-6;
      if (out.at(n, c) < s.min_for(c) - slack || out.at(n, c) > s.max_for(c) + slack) return false;
    }
  }
  return true;
}

// Shape-preserving contract of apply_frofa on a random 4x4x3 grid.
inline std::string keeps_shape(const AugmentationSpec& spec, bool bounded = true) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = random_tensor(16, 3, seed);
    const auto out = apply_frofa(f, spec, RngKey(seed)).features;
    if (out.tokens() != 16 || out.channels() != 3) return spec.label() + ": shape changed";
    if (!out.all_finite()) return spec.label() + ": non-finite output";
    if (bounded && !in_range(out, f, scope_for(spec.variant))) return spec.label() + ": output left the input range";
  }
  return {};
}

inline std::vector<bool> all(std::size_t c, bool v) { return std::vector<bool>(c, v); }

// Reference histogram equalization written from the textbook definition:
// map level k to round((cdf(k-1)) / step) with step = (total - count of the
// top occupied level) / (L - 1), clamped to L-1.
inline std::vector<int> equalize_oracle(const std::vector<int>& levels, int L) {
  std::map<int, long> hist;
  for (int q : levels) ++hist[q];
  const long total = static_cast<long>(levels.size());
  const long top_count = hist.rbegin()->second;
  const long step = (total - top_count) / (L - 1);
  if (step == 0) return levels;
  std::map<int, int> lut;
  long before = 0;
  for (const auto& [q, count] : hist) {
    lut[q] = static_cast<int>(std::min<long>(L - 1, (before + step / 2) / step));
    before += count;
  }
  std::vector<int> out;
  for (int q : levels) out.push_back(lut[q]);
  return out;
}

inline std::vector<int> quantize(const FeatureTensor& g, int L) {
  std::vector<int> q;
  for (float x : g.values()) q.push_back(static_cast<int>(std::lround((L - 1) * static_cast<double>(x))));
  return q;
}

inline FeatureTensor box_oracle(const FeatureTensor& g) {
  const auto side = static_cast<long>(g.side());
  FeatureTensor out(g.tokens(), g.channels());
  for (std::size_t c = 0; c < g.channels(); ++c) {
    for (long i = 0; i < side; ++i) {
      for (long j = 0; j < side; ++j) {
        double acc = 0;
        for (long a = i - 1; a <= i + 1; ++a) {
          for (long b = j - 1; b <= j + 1; ++b) {
            const long ia = a < 0 ? 0 : (a >= side ? side - 1 : a);
            const long jb = b < 0 ? 0 : (b >= side ? side - 1 : b);
            acc += g.at(static_cast<std::size_t>(ia), static_cast<std::size_t>(jb), c);
          }
        }
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c) = static_cast<float>(acc / 9.0);
      }
    }
  }
  return out;
}

}  // namespace oracle_detail

inline std::vector<OracleCase> augmentation_oracles() {
  using namespace oracle_detail;
  std::vector<OracleCase> cases;
  auto add = [&](std::string kind, std::string name, std::function<std::string()> fn) {
    cases.push_back({std::move(kind), std::move(name), std::move(fn)});
  };

  // ---- rotate
  add("rotate", "identity", [] {
    auto g = unit_grid(16, 2, 1);
    const auto in = g;
    kernels::rotate(g, std::vector<double>{0.0, 0.0});
    return close(g, in, 1e-7, "rotate z=0");
  });
  add("rotate", "quarter turn of a 2x2 grid", [] {
    FeatureTensor g(4, 1, std::vector<float>{0.1f, 0.2f, 0.3f, 0.4f});  // in00 in01 in10 in11
    kernels::rotate(g, std::vector<double>{90.0});
    return close(g, FeatureTensor(4, 1, std::vector<float>{0.3f, 0.1f, 0.4f, 0.2f}), 1e-6, "rotate 90");
  });
  add("rotate", "contract", [] { return keeps_shape(make_spec(AugKind::rotate, 90)); });

  // ---- shear
  add("shear_x", "identity", [] {
    auto g = unit_grid(16, 2, 2);
    const auto in = g;
    kernels::shear_x(g, std::vector<double>{0.0, 0.0});
    return close(g, in, 0.0, "shear_x z=0");
  });
  add("shear_x", "unit shear of a 3x3 grid", [] {
    FeatureTensor g(9, 1, std::vector<float>{.1f, .2f, .3f, .4f, .5f, .6f, .7f, .8f, .9f});
    kernels::shear_x(g, std::vector<double>{1.0});
    return close(g, FeatureTensor(9, 1, std::vector<float>{0, .1f, .2f, .4f, .5f, .6f, .8f, .9f, 0}), 1e-7,
                 "shear_x z=1");
  });
  add("shear_x", "contract", [] { return keeps_shape(make_spec(AugKind::shear_x, 0.7)); });
  add("shear_y", "identity", [] {
    auto g = unit_grid(16, 2, 3);
    const auto in = g;
    kernels::shear_y(g, std::vector<double>{0.0, 0.0});
    return close(g, in, 0.0, "shear_y z=0");
  });
  add("shear_y", "unit shear of a 3x3 grid", [] {
    FeatureTensor g(9, 1, std::vector<float>{.1f, .2f, .3f, .4f, .5f, .6f, .7f, .8f, .9f});
    kernels::shear_y(g, std::vector<double>{1.0});
    return close(g, FeatureTensor(9, 1, std::vector<float>{0, .2f, .6f, .1f, .5f, .9f, .4f, .8f, 0}), 1e-7,
                 "shear_y z=1");
  });
  add("shear_y", "contract", [] { return keeps_shape(make_spec(AugKind::shear_y, 0.7)); });

  // ---- translate
  add("translate_x", "identity", [] {
    auto g = unit_grid(9, 2, 4);
    const auto in = g;
    kernels::translate_x(g, std::vector<std::int64_t>{0, 0});
    return close(g, in, 0.0, "translate_x z=0");
  });
  add("translate_x", "shift right by one", [] {
    FeatureTensor g(9, 1, std::vector<float>{.1f, .2f, .3f, .4f, .5f, .6f, .7f, .8f, .9f});
    kernels::translate_x(g, std::vector<std::int64_t>{1});
    return close(g, FeatureTensor(9, 1, std::vector<float>{0, .1f, .2f, 0, .4f, .5f, 0, .7f, .8f}), 0.0,
                 "translate_x +1");
  });
  add("translate_x", "contract", [] { return keeps_shape(make_spec(AugKind::translate_x, 3)); });
  add("translate_y", "identity", [] {
    auto g = unit_grid(9, 2, 5);
    const auto in = g;
    kernels::translate_y(g, std::vector<std::int64_t>{0, 0});
    return close(g, in, 0.0, "translate_y z=0");
  });
  add("translate_y", "shift down by one", [] {
    FeatureTensor g(9, 1, std::vector<float>{.1f, .2f, .3f, .4f, .5f, .6f, .7f, .8f, .9f});
    kernels::translate_y(g, std::vector<std::int64_t>{1});
    return close(g, FeatureTensor(9, 1, std::vector<float>{0, 0, 0, .1f, .2f, .3f, .4f, .5f, .6f}), 0.0,
                 "translate_y +1");
  });
  add("translate_y", "contract", [] { return keeps_shape(make_spec(AugKind::translate_y, 3)); });

  // ---- crop family
  add("crop", "identity at v = side", [] {
    const auto f = random_tensor(16, 3, 6);
    const auto r = apply_frofa(f, make_spec(AugKind::crop, 4), RngKey(1));
    return expect(r.features == f, "crop v=side should be the identity");
  });
  add("crop", "v=1 on N=4 picks one input token", [] {
    const auto f = random_tensor(4, 2, 7);
    std::set<std::size_t> seen;
    for (std::uint64_t k = 0; k < 200; ++k) {
      const auto out = apply_frofa(f, make_spec(AugKind::crop, 1), RngKey(k)).features;
      if (out.tokens() != 1) return std::string("crop v=1 must give one token");
      bool found = false;
      for (std::size_t n = 0; n < 4; ++n) {
        if (out.at(0, 0) == f.at(n, 0) && out.at(0, 1) == f.at(n, 1)) {
          seen.insert(n);
          found = true;
        }
      }
      if (!found) return std::string("crop v=1 produced a token not in the input");
    }
    return expect(seen.size() == 4, "crop v=1 did not reach all four outcomes");
  });
  add("crop", "contract", [] {
    const auto f = random_tensor(16, 3, 8);
    const auto out = apply_frofa(f, make_spec(AugKind::crop, 3), RngKey(2)).features;
    return expect(out.tokens() == 9 && out.channels() == 3 && in_range(out, f), "crop v=3 must give 9 tokens");
  });
  add("resized_crop", "identity at v = side", [] {
    const auto f = random_tensor(16, 3, 9);
    return close(apply_frofa(f, make_spec(AugKind::resized_crop, 4), RngKey(1)).features, f, 0.0,
                 "resized_crop v=side");
  });
  add("resized_crop", "upsample then crop", [] {
    FeatureTensor f(4, 1, std::vector<float>{0, 1, 2, 3});
    const std::vector<kernels::Window> w{{1, 1, 2, 2}};
    return close(kernels::resized_crop(f, 4, w), FeatureTensor(4, 1, std::vector<float>{.75f, 1.25f, 1.75f, 2.25f}),
                 1e-6, "resized_crop 2->4");
  });
  add("resized_crop", "contract", [] { return keeps_shape(make_spec(AugKind::resized_crop, 7)); });
  add("inception_crop", "identity at v=0", [] {
    const auto f = random_tensor(16, 3, 10);
    for (std::uint64_t k = 0; k < 50; ++k) {
      if (!(apply_frofa(f, make_spec(AugKind::inception_crop, 0.0), RngKey(k)).features == f)) {
        return std::string("inception_crop v=0 changed the input");
      }
    }
    return std::string();
  });
  add("inception_crop", "single-cell window spreads one value", [] {
    const auto f = random_tensor(16, 2, 11);
    const std::vector<kernels::Window> w{{1, 2, 1, 1}, {3, 0, 1, 1}};
    const auto out = kernels::crop_and_resize(f, w);
    for (std::size_t n = 0; n < 16; ++n) {
      if (out.at(n, 0) != f.at(1, 2, 0) || out.at(n, 1) != f.at(3, 0, 1)) {
        return std::string("crop_and_resize of a 1x1 window must be constant");
      }
    }
    return std::string();
  });
  add("inception_crop", "contract", [] { return keeps_shape(make_spec(AugKind::inception_crop, 1.0)); });

  // ---- patch dropout
  add("patch_dropout", "v=N is a row permutation", [] {
    const auto f = random_tensor(16, 3, 12);
    const auto out = apply_frofa(f, make_spec(AugKind::patch_dropout, 16), RngKey(3)).features;
    std::multiset<std::vector<float>> a, b;
    for (std::size_t n = 0; n < 16; ++n) {
      a.insert({f.row(n).begin(), f.row(n).end()});
      b.insert({out.row(n).begin(), out.row(n).end()});
    }
    return expect(a == b, "patch_dropout v=N must permute rows");
  });
  add("patch_dropout", "forced keep list", [] {
    const auto f = random_tensor(9, 2, 13);
    const auto out = kernels::patch_dropout(f, {{4, 0}, {4, 0}});
    bool ok = out.tokens() == 2;
    for (std::size_t c = 0; ok && c < 2; ++c) ok = out.at(0, c) == f.at(4, c) && out.at(1, c) == f.at(0, c);
    const auto one = apply_frofa(f, make_spec(AugKind::patch_dropout, 1), RngKey(4)).features;
    return expect(ok && one.tokens() == 1, "patch_dropout kept the wrong rows");
  });
  add("patch_dropout", "N=196 keep 49", [] {
    const auto f = random_tensor(196, 4, 14);
    const auto out = apply_frofa(f, make_spec(AugKind::patch_dropout, 49), RngKey(5)).features;
    if (out.tokens() != 49 || out.channels() != 4) return std::string("patch_dropout shape must be 49x4");
    std::set<std::vector<float>> rows;
    for (std::size_t n = 0; n < 196; ++n) rows.insert({f.row(n).begin(), f.row(n).end()});
    std::set<std::vector<float>> kept;
    for (std::size_t n = 0; n < 49; ++n) {
      std::vector<float> r(out.row(n).begin(), out.row(n).end());
      if (!rows.count(r)) return std::string("patch_dropout invented a row");
      kept.insert(r);
    }
    return expect(kept.size() == 49, "patch_dropout repeated a row");
  });

  // ---- channel dropout
  add("channel_dropout", "identity at v=0", [] {
    const auto f = random_tensor(16, 8, 15);
    return expect(apply_frofa(f, make_spec(AugKind::channel_dropout, 0.0), RngKey(1)).features == f,
                  "channel_dropout v=0 changed the input");
  });
  add("channel_dropout", "v=1 zeroes everything", [] {
    const auto f = random_tensor(16, 8, 16);
    return expect(apply_frofa(f, make_spec(AugKind::channel_dropout, 1.0), RngKey(1)).features == FeatureTensor(16, 8),
                  "channel_dropout v=1 must zero all channels");
  });
  add("channel_dropout", "v=0.5 on C=1000", [] {
    const auto f = random_tensor(4, 1000, 17, 1.0, 2.0);
    const auto out = apply_frofa(f, make_spec(AugKind::channel_dropout, 0.5), RngKey(6)).features;
    std::size_t dropped = 0;
    for (std::size_t c = 0; c < 1000; ++c) {
      bool zero = true, same = true;
      for (std::size_t n = 0; n < 4; ++n) {
        zero = zero && out.at(n, c) == 0.0f;
        same = same && out.at(n, c) == f.at(n, c);
      }
      if (!zero && !same) return std::string("channel_dropout must zero or keep whole channels");
      dropped += zero;
    }
    const double frac = static_cast<double>(dropped) / 1000.0;
    return expect(frac >= 0.45 && frac <= 0.55, "dropped fraction " + std::to_string(frac));
  });

  // ---- brightness / contrast
  add("brightness", "identity", [] {
    auto g = unit_grid(16, 2, 18);
    const auto in = g;
    kernels::brightness(g, std::vector<double>{0.0, 0.0});
    return close(g, in, 0.0, "brightness z=0");
  });
  add("brightness", "forced shifts", [] {
    FeatureTensor g(4, 2, 0.5f);
    auto d = g;
    kernels::brightness(d, std::vector<double>{0.2, 0.2});
    FeatureTensor c = g;
    kernels::brightness(c, std::vector<double>{0.1, -0.1});
    FeatureTensor want(4, 2);
    for (std::size_t n = 0; n < 4; ++n) {
      want.at(n, 0) = 0.6f;
      want.at(n, 1) = 0.4f;
    }
    auto e = close(d, FeatureTensor(4, 2, 0.7f), 1e-6, "brightness +0.2");
    return e.empty() ? close(c, want, 1e-6, "brightness per channel") : e;
  });
  add("brightness", "contract", [] {
    auto g = unit_grid(16, 2, 19);
    kernels::brightness(g, std::vector<double>{1.0, -1.0});
    auto e = expect(in_unit(g), "brightness left [0,1]");
    return e.empty() ? keeps_shape(make_spec(AugKind::brightness, 1.0, std::nullopt, Variant::channel2)) : e;
  });
  add("contrast", "identity", [] {
    auto g = unit_grid(16, 2, 20);
    const auto in = g;
    kernels::contrast(g, std::vector<double>{1.0, 1.0});
    return close(g, in, 0.0, "contrast z=1");
  });
  add("contrast", "forced scales", [] {
    FeatureTensor g(1, 2, std::vector<float>{0.2f, 0.8f});
    auto twice = g;
    kernels::contrast(twice, std::vector<double>{2.0, 2.0});
    auto half = g;
    kernels::contrast(half, std::vector<double>{0.5, 0.5});
    auto e = close(twice, FeatureTensor(1, 2, std::vector<float>{0.4f, 1.0f}), 1e-7, "contrast x2");
    return e.empty() ? close(half, FeatureTensor(1, 2, std::vector<float>{0.1f, 0.4f}), 1e-7, "contrast x0.5") : e;
  });
  add("contrast", "contract", [] { return keeps_shape(make_spec(AugKind::contrast, 10, std::nullopt, Variant::channel)); });

  // ---- equalize
  add("equalize", "identity at v=0 and on constants", [] {
    const auto f = random_tensor(16, 3, 21);
    if (!(apply_frofa(f, make_spec(AugKind::equalize, 0.0), RngKey(1)).features == f)) {
      return std::string("equalize v=0 changed the input");
    }
    FeatureTensor g(196, 2, 0.3f);
    const auto in = g;
    kernels::equalize(g, false, all(1, true));
    return close(g, in, 0.0, "equalize on a constant grid");
  });
  add("equalize", "two-level grid and random grid against the oracle", [] {
    FeatureTensor g(196, 4);
    for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = (i % 2) ? 1.0f : 0.0f;
    auto two = g;
    kernels::equalize(two, false, all(1, true));
    const auto want2 = equalize_oracle(quantize(g, kernels::kEqualizeLevels), kernels::kEqualizeLevels);
    if (quantize(two, kernels::kEqualizeLevels) != want2) return std::string("two-level equalize disagrees with the oracle");
    std::set<float> levels(two.values().begin(), two.values().end());
    if (levels.size() != 2 || two.values()[0] >= two.values()[1]) return std::string("two-level order lost");

    auto r = unit_grid(196, 4, 22);
    for (auto& x : r.values()) x = x * x * 0.6f;  // skewed histogram
    const auto want = equalize_oracle(quantize(r, kernels::kEqualizeLevels), kernels::kEqualizeLevels);
    kernels::equalize(r, false, all(1, true));
    return expect(quantize(r, kernels::kEqualizeLevels) == want, "random equalize disagrees with the oracle");
  });
  add("equalize", "contract", [] { return keeps_shape(make_spec(AugKind::equalize, 1.0)); });

  // ---- invert
  add("invert", "identity at v=0", [] {
    const auto f = random_tensor(16, 3, 23);
    return expect(apply_frofa(f, make_spec(AugKind::invert, 0.0), RngKey(1)).features == f, "invert v=0");
  });
  add("invert", "sign flip and involution", [] {
    FeatureTensor f(1, 2, std::vector<float>{1.0f, -2.0f});
    const auto once = apply_frofa(f, make_spec(AugKind::invert, 1.0), RngKey(1)).features;
    const auto twice = apply_frofa(once, make_spec(AugKind::invert, 1.0), RngKey(2)).features;
    return expect(once == FeatureTensor(1, 2, std::vector<float>{-1.0f, 2.0f}) && twice == f, "invert v=1");
  });
  add("invert", "contract", [] { return keeps_shape(make_spec(AugKind::invert, 1.0), false); });

  // ---- posterize
  add("posterize", "identity at zero shift", [] {
    FeatureTensor g(256, 1);
    for (std::size_t q = 0; q < 256; ++q) g.at(q, 0) = static_cast<float>(q / 255.0);
    const auto in = g;
    kernels::posterize(g, std::vector<std::int64_t>{0});
    return close(g, in, 0.0, "posterize z=0");
  });
  add("posterize", "exhaustive 8-bit enumeration", [] {
    for (std::int64_t z = 1; z <= 8; ++z) {
      FeatureTensor g(256, 1);
      for (std::size_t q = 0; q < 256; ++q) g.at(q, 0) = static_cast<float>(q / 255.0);
      kernels::posterize(g, std::vector<std::int64_t>{z});
      std::set<long> distinct;
      for (long q = 0; q < 256; ++q) {
        const long got = std::lround(255.0 * g.at(static_cast<std::size_t>(q), 0));
        const long want = z >= 8 ? 0 : (q / (1L << z)) * (1L << z);
        if (got != want) {
          return "posterize q=" + std::to_string(q) + " z=" + std::to_string(z) + " gave " + std::to_string(got);
        }
        distinct.insert(got);
      }
      if (distinct.size() != static_cast<std::size_t>(256 >> z)) {
        return "posterize z=" + std::to_string(z) + " has " + std::to_string(distinct.size()) + " levels";
      }
      if (z == 1 && std::any_of(distinct.begin(), distinct.end(), [](long v) { return v % 2 != 0; })) {
        return std::string("posterize z=1 must produce even levels");
      }
    }
    FeatureTensor g(1, 1, static_cast<float>(200 / 255.0));
    kernels::posterize(g, std::vector<std::int64_t>{4});
    return expect(std::lround(255.0 * g.at(0, 0)) == 192, "posterize 200>>4<<4 must be 192");
  });
  add("posterize", "contract", [] {
    return keeps_shape(make_spec(AugKind::posterize, 1, 8, Variant::channel));
  });

  // ---- sharpness
  add("sharpness", "identity at z=0 and on constants", [] {
    auto g = unit_grid(16, 2, 24);
    const auto in = g;
    kernels::sharpness(g, std::vector<double>{0.0, 0.0});
    auto e = close(g, in, 0.0, "sharpness z=0");
    FeatureTensor k(16, 2, 0.4f);
    kernels::sharpness(k, std::vector<double>{2.5, 0.7});
    return e.empty() ? close(k, FeatureTensor(16, 2, 0.4f), 1e-6, "sharpness on a constant grid") : e;
  });
  add("sharpness", "z=1 is the box filter", [] {
    auto g = unit_grid(25, 3, 25);
    const auto want = box_oracle(g);
    kernels::sharpness(g, std::vector<double>{1.0, 1.0, 1.0});
    return close(g, want, 1e-6, "sharpness z=1");
  });
  add("sharpness", "contract", [] {
    auto e = keeps_shape(make_spec(AugKind::sharpness, 3.0));
    if (!e.empty()) return e;
    try {
      (void)apply_frofa(random_tensor(4, 1, 1), make_spec(AugKind::sharpness, 1.0), RngKey(1));
    } catch (const std::invalid_argument&) {
      return std::string();
    }
    return std::string("sharpness on a 2x2 grid must be rejected");
  });

  // ---- solarize
  add("solarize", "identity at v=0", [] {
    const auto f = random_tensor(16, 3, 26);
    return expect(apply_frofa(f, make_spec(AugKind::solarize, 0.0), RngKey(1)).features == f, "solarize v=0");
  });
  add("solarize", "band edges", [] {
    FeatureTensor f(5, 1, std::vector<float>{0.0f, -3.0f, 6.0f, -4.0f, 10.0f});
    kernels::solarize(f, compute_stats(f, NormScope::global), all(1, true));
    return close(f, FeatureTensor(5, 1, std::vector<float>{0.0f, -1.0f, 4.0f, 0.0f, 0.0f}), 0.0, "solarize");
  });
  add("solarize", "contract", [] { return keeps_shape(make_spec(AugKind::solarize, 1.0), false); });

  // ---- uniform noise
  add("uniform_noise", "identity as v goes to zero", [] {
    auto g = unit_grid(16, 2, 27);
    const auto in = g;
    Rng rng(RngKey(1));
    kernels::uniform_noise(g, 0.0, rng);
    return close(g, in, 0.0, "uniform_noise v=0");
  });
  add("uniform_noise", "support and mean-shift bounds", [] {
    const double v = 0.3;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      FeatureTensor g(196, 32, 0.5f);
      const auto in = g;
      Rng rng(RngKey(seed).fold("noise"));
      kernels::uniform_noise(g, v, rng);
      double sum = 0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = static_cast<double>(g.values()[i]) - in.values()[i];
        if (std::abs(d) > v + 1e-6) return std::string("uniform_noise moved a value by more than v");
        sum += d;
      }
      const double mean = sum / static_cast<double>(g.size());
      if (std::abs(mean) >= 3 * v / std::sqrt(static_cast<double>(g.size()))) {
        return "uniform_noise mean shift " + std::to_string(mean);
      }
    }
    return std::string();
  });
  add("uniform_noise", "contract", [] { return keeps_shape(make_spec(AugKind::uniform_noise, 0.7)); });

  // ---- jpeg
  add("jpeg", "quality 100 on a smooth gradient", [] {
    FeatureTensor g(64, 2);
    for (std::size_t i = 0; i < 8; ++i) {
      for (std::size_t j = 0; j < 8; ++j) {
        g.at(i, j, 0) = static_cast<float>((i + j) / 14.0);
        g.at(i, j, 1) = static_cast<float>(i / 7.0);
      }
    }
    const auto in = g;
    kernels::jpeg(g, std::vector<std::int64_t>{100, 100});
    return close(g, in, 0.1, "jpeg q100");
  });
  add("jpeg", "quality 10 changes a random grid", [] {
    auto g = unit_grid(64, 2, 28);
    const auto in = g;
    kernels::jpeg(g, std::vector<std::int64_t>{10, 10});
    return expect(!(g == in), "jpeg q10 left a random grid untouched");
  });
  add("jpeg", "contract", [] { return keeps_shape(make_spec(AugKind::jpeg, 10, 100)); });

  // ---- mixup
  add("mixup", "identity at z=1", [] {
    std::vector<FeatureTensor> f{random_tensor(4, 2, 29), random_tensor(4, 2, 30)};
    std::vector<std::vector<float>> y{{1, 0, 0}, {0, 1, 0}};
    const auto f0 = f;
    const auto y0 = y;
    kernels::mixup(f, y, std::vector<std::size_t>{1, 0}, std::vector<double>{1.0, 1.0});
    return expect(f == f0 && y == y0, "mixup z=1 changed the batch");
  });
  add("mixup", "half mix of two one-hot labels", [] {
    std::vector<FeatureTensor> f{FeatureTensor(1, 1, 2.0f), FeatureTensor(1, 1, 4.0f)};
    std::vector<std::vector<float>> y{{1, 0, 0}, {0, 1, 0}};
    kernels::mixup(f, y, std::vector<std::size_t>{1, 0}, std::vector<double>{0.5, 0.5});
    return expect(y[0] == std::vector<float>{0.5f, 0.5f, 0.0f} && f[0].at(0, 0) == 3.0f, "mixup z=0.5");
  });
  add("mixup", "contract", [] {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::vector<FeatureTensor> f;
      std::vector<std::vector<float>> y;
      for (std::size_t i = 0; i < 6; ++i) {
        f.push_back(random_tensor(4, 2, seed * 10 + i));
        std::vector<float> one(4, 0.0f);
        one[i % 4] = 1.0f;
        y.push_back(one);
      }
      mixup_batch(f, y, 0.4, RngKey(seed));
      for (const auto& lab : y) {
        double s = 0;
        for (float p : lab) {
          if (p < 0.0f || p > 1.0f) return std::string("mixup label left the simplex");
          s += p;
        }
        if (std::abs(s - 1.0) > 1e-6) return std::string("mixup label does not sum to one");
      }
      for (const auto& t : f) {
        if (t.tokens() != 4 || !t.all_finite()) return std::string("mixup broke a feature tensor");
      }
    }
    std::vector<FeatureTensor> single{random_tensor(4, 2, 1)};
    std::vector<std::vector<float>> ys{{1, 0}};
    try {
      mixup_batch(single, ys, 0.4, RngKey(1));
    } catch (const std::invalid_argument&) {
      return std::string();
    }
    return std::string("mixup on a batch of one must be rejected");
  });

  return cases;
}

}  // namespace frofa::testing
