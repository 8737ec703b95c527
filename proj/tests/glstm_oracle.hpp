#pragma once

// Line-by-line reference for the Graph LSTM layer on plain std::vector
// data. Shares nothing with the library beyond the values fed into it.

#include <cmath>
#include <cstddef>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

struct Layer {
  Mat Wu, Wf, Wc, Wo, Uu, Uf, Uc, Uo, Uun, Ufn, Ucn, Uon;
  Vec bu, bf, bc, bo;
};

struct Instance {
  std::size_t nodes = 0;
  std::size_t dim = 0;
  std::vector<std::vector<std::size_t>> adjacency;  // sorted
  std::vector<Vec> inputs;
  std::vector<Layer> layers;
  std::vector<std::size_t> order;
  bool adaptive = true;
  bool latest_gate_input = false;
  bool residual = true;
};

struct Output {
  std::vector<Vec> h, m;      // last layer
  std::vector<Vec> features;  // classifier input
};

inline double sigm(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec mv(const Mat& a, const Vec& x) {
  Vec y(a.size(), 0.0);
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < x.size(); ++c) y[r] += a[r][c] * x[c];
  return y;
}

inline Vec gate(const Vec& b, std::initializer_list<Vec> terms) {
  Vec out = b;
  for (const Vec& t : terms)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += t[k];
  return out;
}

inline Output run(const Instance& in) {
  const std::size_t n = in.nodes, d = in.dim;
  std::vector<Vec> x = in.inputs;
  std::vector<Vec> h_prev(n, Vec(d, 0.0)), m_prev(n, Vec(d, 0.0));
  for (const Layer& L : in.layers) {
    std::vector<Vec> h_new(n, Vec(d, 0.0)), m_new(n, Vec(d, 0.0));
    std::vector<bool> q(n, false);
    for (std::size_t i : in.order) {
      const auto& nb = in.adjacency[i];
      Vec hbar(d, 0.0);
      for (std::size_t j : nb)
        for (std::size_t k = 0; k < d; ++k) hbar[k] += (q[j] ? h_new[j][k] : h_prev[j][k]);
      if (!nb.empty())
        for (double& v : hbar) v /= static_cast<double>(nb.size());

      Vec gu = gate(L.bu, {mv(L.Wu, x[i]), mv(L.Uu, h_prev[i]), mv(L.Uun, hbar)});
      Vec go = gate(L.bo, {mv(L.Wo, x[i]), mv(L.Uo, h_prev[i]), mv(L.Uon, hbar)});
      Vec gc = gate(L.bc, {mv(L.Wc, x[i]), mv(L.Uc, h_prev[i]), mv(L.Ucn, hbar)});
      Vec gf = in.adaptive ? gate(L.bf, {mv(L.Wf, x[i]), mv(L.Uf, h_prev[i])})
                           : gate(L.bf, {mv(L.Wf, x[i]), mv(L.Uf, h_prev[i]), mv(L.Ufn, hbar)});
      for (std::size_t k = 0; k < d; ++k) {
        gu[k] = sigm(gu[k]);
        go[k] = sigm(go[k]);
        gc[k] = std::tanh(gc[k]);
        gf[k] = sigm(gf[k]);
      }

      Vec m(d, 0.0);
      if (in.adaptive && !nb.empty()) {
        for (std::size_t j : nb) {
          const Vec& hj = (in.latest_gate_input && q[j]) ? h_new[j] : h_prev[j];
          const Vec gfj = gate(L.bf, {mv(L.Wf, x[i]), mv(L.Ufn, hj)});
          const Vec& mj = q[j] ? m_new[j] : m_prev[j];
          for (std::size_t k = 0; k < d; ++k) m[k] += sigm(gfj[k]) * mj[k];
        }
        for (double& v : m) v /= static_cast<double>(nb.size());
      }
      for (std::size_t k = 0; k < d; ++k) m[k] += gf[k] * m_prev[i][k] + gu[k] * gc[k];
      Vec h(d);
      for (std::size_t k = 0; k < d; ++k) h[k] = std::tanh(go[k] * m[k]);
      h_new[i] = h;
      m_new[i] = m;
      q[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (in.residual)
        for (std::size_t k = 0; k < d; ++k) x[i][k] += h_new[i][k];
      else
        x[i] = h_new[i];
    }
    h_prev = h_new;
    m_prev = m_new;
  }
  return {h_prev, m_prev, x};
}

inline Mat random_mat(std::mt19937_64& rng, std::size_t d, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat a(d, Vec(d));
  for (auto& row : a)
    for (double& v : row) v = u(rng);
  return a;
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t d, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(d);
  for (double& x : v) x = u(rng);
  return v;
}

inline Layer random_layer(std::mt19937_64& rng, std::size_t d, double scale) {
  Layer L;
  for (Mat* m : {&L.Wu, &L.Wf, &L.Wc, &L.Wo, &L.Uu, &L.Uf, &L.Uc, &L.Uo, &L.Uun, &L.Ufn, &L.Ucn, &L.Uon})
    *m = random_mat(rng, d, scale);
  for (Vec* b : {&L.bu, &L.bf, &L.bc, &L.bo}) *b = random_vec(rng, d, scale);
  return L;
}

/// Named view used to copy oracle values into a parameter store.
inline std::vector<std::pair<std::string, const Mat*>> matrices(const Layer& L) {
  return {{"Wu", &L.Wu}, {"Wf", &L.Wf}, {"Wc", &L.Wc}, {"Wo", &L.Wo},     {"Uu", &L.Uu},   {"Uf", &L.Uf},
          {"Uc", &L.Uc}, {"Uo", &L.Uo}, {"Uun", &L.Uun}, {"Ufn", &L.Ufn}, {"Ucn", &L.Ucn}, {"Uon", &L.Uon}};
}

inline std::vector<std::pair<std::string, const Vec*>> biases(const Layer& L) {
  return {{"bu", &L.bu}, {"bf", &L.bf}, {"bc", &L.bc}, {"bo", &L.bo}};
}

}  // namespace oracle
