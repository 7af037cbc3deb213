#include "gdi/learner.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gdi {

namespace {

std::vector<double> logits_at(const HeadParams& h, int n_actions, int s) {
  return std::vector<double>(h.A.begin() + static_cast<size_t>(s) * n_actions,
                             h.A.begin() + static_cast<size_t>(s + 1) * n_actions);
}

void check_segment_indices(const PolicyParams& p, const SampleSegment& seg) {
  for (int t = 0; t < seg.length(); ++t) {
    if (seg.states[t] < 0 || seg.states[t] >= p.n_features)
      throw std::invalid_argument("segment state out of range");
    if (seg.actions[t] < 0 || seg.actions[t] >= p.n_actions)
      throw std::invalid_argument("segment action out of range");
  }
  if (seg.bootstrap_state < 0 || seg.bootstrap_state >= p.n_features)
    throw std::invalid_argument("segment bootstrap state out of range");
}

void check_layout(const PolicyParams& p, AlgoMode mode) {
  if (mode == AlgoMode::gdi_h3) {
    if (p.isomorphic)
      throw std::invalid_argument("heterogeneous mode needs two distinct heads");
  } else {
    if (!p.isomorphic)
      throw std::invalid_argument("mixture modes use an isomorphic layout");
  }
}

}  // namespace

const char* algo_mode_name(AlgoMode m) {
  switch (m) {
    case AlgoMode::gdi_i3:
      return "gdi_i3";
    case AlgoMode::gdi_h3:
      return "gdi_h3";
    case AlgoMode::gdi_i1:
      return "gdi_i1";
    case AlgoMode::fixed_lambda:
      return "fixed_lambda";
  }
  throw std::logic_error("algo_mode_name: bad mode");
}

AlgoMode algo_mode_from_name(const std::string& name) {
  if (name == "gdi_i3") return AlgoMode::gdi_i3;
  if (name == "gdi_h3") return AlgoMode::gdi_h3;
  if (name == "gdi_i1") return AlgoMode::gdi_i1;
  if (name == "fixed_lambda") return AlgoMode::fixed_lambda;
  throw std::invalid_argument("unknown algorithm mode: " + name);
}

double reward_shape_log(double r) {
  double m = r >= 0.0 ? 1.0 : -1.0;
  return m * std::log1p(std::fabs(r));
}

double reward_shape_pow(double r) {
  double s = static_cast<double>(r > 0.0) - static_cast<double>(r < 0.0);
  return s * (std::pow(std::fabs(r) + 1.0, 0.25) - 1.0) + 0.001 * r;
}

Targets compute_targets(const PolicyParams& frozen, const SampleSegment& seg,
                        const IndexPoint& lambda, AlgoMode mode, const LossWeights& w) {
  seg.validate();
  w.validate();
  check_layout(frozen, mode);
  check_segment_indices(frozen, seg);
  const int t_len = seg.length();
  const int n_heads = (mode == AlgoMode::gdi_h3) ? 2 : 1;

  Targets out;
  out.heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    HeadTargets ht;
    ht.shaped.resize(t_len);
    for (int t = 0; t < t_len; ++t)
      ht.shaped[t] = (h == 0) ? reward_shape_log(seg.raw_rewards[t])
                              : reward_shape_pow(seg.raw_rewards[t]);
    std::vector<double> pi_taken(t_len), values(t_len), q_taken(t_len);
    for (int t = 0; t < t_len; ++t) {
      int s = seg.states[t], a = seg.actions[t];
      std::vector<double> pol;
      if (mode == AlgoMode::gdi_h3) {
        pol = tempered_softmax(logits_at(frozen.head(h), frozen.n_actions, s), 1.0);
      } else {
        pol = mixture_policy(frozen, lambda, s);
      }
      pi_taken[t] = pol[a];
      values[t] = frozen.head(h).v[s];
      q_taken[t] = dueling_q(frozen, h, s).Q[a];
    }
    double bootstrap_v = frozen.head(h).v[seg.bootstrap_state];
    ht.vt = vtrace_from_arrays(pi_taken, seg.behavior_probs, ht.shaped, seg.dones, values,
                               bootstrap_v, w);
    ht.rt = retrace_from_arrays(pi_taken, seg.behavior_probs, ht.shaped, seg.dones, q_taken, w);
    out.heads.push_back(std::move(ht));
  }
  return out;
}

Gradients make_gradients(const PolicyParams& p) {
  Gradients g;
  g.a1.assign(p.h1.A.size(), 0.0);
  g.v1.assign(p.h1.v.size(), 0.0);
  if (!p.isomorphic) {
    g.a2.assign(p.h2.A.size(), 0.0);
    g.v2.assign(p.h2.v.size(), 0.0);
  }
  return g;
}

LossReport compute_losses(const PolicyParams& params, const SampleSegment& seg,
                          const IndexPoint& lambda, const Targets& targets,
                          const LossWeights& w, AlgoMode mode, Gradients* out) {
  seg.validate();
  w.validate();
  check_layout(params, mode);
  check_segment_indices(params, seg);
  const int t_len = seg.length();
  const int na = params.n_actions;
  const int n_heads = (mode == AlgoMode::gdi_h3) ? 2 : 1;
  if (static_cast<int>(targets.heads.size()) != n_heads)
    throw std::invalid_argument("compute_losses: target head count mismatch");

  LossReport rep;
  for (int h = 0; h < n_heads; ++h) {
    const HeadTargets& ht = targets.heads[h];
    if (static_cast<int>(ht.vt.advantages.size()) != t_len ||
        static_cast<int>(ht.vt.v_targets.size()) != t_len)
      throw std::invalid_argument("compute_losses: target length mismatch");
    std::vector<double>* ga = nullptr;
    std::vector<double>* gv = nullptr;
    if (out) {
      bool first = (h == 0);
      ga = first ? &out->a1 : &out->a2;
      gv = first ? &out->v1 : &out->v2;
      if (ga->size() != params.head(h).A.size() || gv->size() != params.head(h).v.size())
        throw std::invalid_argument("compute_losses: gradient size mismatch");
    }

    for (int t = 0; t < t_len; ++t) {
      int s = seg.states[t], a = seg.actions[t];
      std::vector<double> arow = logits_at(params.head(h), na, s);

      double adv = ht.vt.advantages[t];
      if (mode == AlgoMode::gdi_h3) {
        std::vector<double> ph = tempered_softmax(arow, 1.0);
        double pa = std::max(ph[a], 1e-12);
        rep.pi_loss += w.pi_scale * (-adv) * std::log(pa);
        if (ga) {
          double coef = w.pi_scale * (-adv);
          for (int c = 0; c < na; ++c)
            (*ga)[static_cast<size_t>(s) * na + c] += coef * ((c == a ? 1.0 : 0.0) - ph[c]);
        }
      } else {
        std::vector<double> p1 = tempered_softmax(arow, lambda.tau1);
        std::vector<double> p2 = tempered_softmax(arow, lambda.tau2);
        double eps = lambda.epsilon;
        double pa = std::max(eps * p1[a] + (1.0 - eps) * p2[a], 1e-12);
        rep.pi_loss += w.pi_scale * (-adv) * std::log(pa);
        if (ga) {
          double k1 = std::isinf(lambda.tau1) ? 0.0 : std::min(1.0 / lambda.tau1, kInvTempCap);
          double k2 = std::isinf(lambda.tau2) ? 0.0 : std::min(1.0 / lambda.tau2, kInvTempCap);
          double coef = w.pi_scale * (-adv) / pa;
          for (int c = 0; c < na; ++c) {
            double ind = (c == a) ? 1.0 : 0.0;
            double d1 = eps * k1 * p1[a] * (ind - p1[c]);
            double d2 = (1.0 - eps) * k2 * p2[a] * (ind - p2[c]);
            (*ga)[static_cast<size_t>(s) * na + c] += coef * (d1 + d2);
          }
        }
      }

      double vs = params.head(h).v[s];
      double ev = ht.vt.v_targets[t] - vs;
      rep.v_loss += w.v_scale * 0.5 * ev * ev;
      if (gv) (*gv)[s] += w.v_scale * (-ev);

      if (t < ht.rt.n_valid) {
        DuelingOut duel = dueling_q(params, h, s);
        double eq = ht.rt.q_targets[t] - duel.Q[a];
        rep.q_loss += w.q_scale * 0.5 * eq * eq;
        if (ga) {
          std::vector<double> pref = tempered_softmax(arow, 1.0);
          double coef = w.q_scale * (-eq);
          for (int c = 0; c < na; ++c) {
            // Q(a) = A(a) - E_ref[A] + V, so dQ(a)/dA_c passes through the
            // reference-policy centering term.
            double dq = ((c == a) ? 1.0 : 0.0) - pref[c] * (1.0 + duel.Abar[c]);
            (*ga)[static_cast<size_t>(s) * na + c] += coef * dq;
          }
          (*gv)[s] += coef;
        }
      }
    }
  }
  rep.total = rep.pi_loss + rep.v_loss + rep.q_loss;
  return rep;
}

void apply_sgd(PolicyParams& params, const Gradients& g, double step) {
  if (!std::isfinite(step)) throw std::invalid_argument("apply_sgd: non-finite step");
  auto apply_head = [step](HeadParams& h, const std::vector<double>& ga,
                           const std::vector<double>& gv) {
    if (ga.size() != h.A.size() || gv.size() != h.v.size())
      throw std::invalid_argument("apply_sgd: gradient size mismatch");
    for (size_t i = 0; i < ga.size(); ++i) {
      if (!std::isfinite(ga[i])) throw std::invalid_argument("apply_sgd: non-finite gradient");
      h.A[i] -= step * ga[i];
    }
    for (size_t i = 0; i < gv.size(); ++i) {
      if (!std::isfinite(gv[i])) throw std::invalid_argument("apply_sgd: non-finite gradient");
      h.v[i] -= step * gv[i];
    }
  };
  apply_head(params.h1, g.a1, g.v1);
  if (!params.isomorphic) apply_head(params.h2, g.a2, g.v2);
  ++params.version;
}

}  // namespace gdi
