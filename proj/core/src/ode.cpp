#include "krein/ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "krein/errors.hpp"
#include "krein/special.hpp"
#include "krein/util.hpp"

namespace krein {

namespace {

constexpr double kRenormAt = 1e100;
constexpr double kMaxPhasePerTransfer = 30.0;  // cap on omega*h per cosh/sinh transfer
constexpr double kRecordPhase = 0.1;           // knot spacing (phase units) when recording
constexpr double kRecordLogRho = 0.1;          // knot spacing (log z) for euler pieces
constexpr double kSeriesArg = 30.0;            // cap on lambda*c*sigma^(2+p) in edge series
constexpr double kCancelGuard = 1e-12;         // |f_N - psi f_D| / f_N below this: digits gone
constexpr double kTinyPhase = 1e-9;            // below this x the solution is affine to 1 ulp

// One marching knot.  Derivatives carry separate in/out values so that the
// jump f' -> f' + lambda*m*f at an atom is preserved in the record.
struct Rec {
  double s;
  double fn, fnp_in, fnp_out;
  double fd, fdp_in, fdp_out;
  double L;
};

struct State {
  double s = 0.0;
  double fn = 1.0, fnp = 0.0;
  double fd = 0.0, fdp = 1.0;
  double L = 0.0;  // log of the common scale factor stripped so far
};

// Power-edge basis: the solution pair of F'' = lamc * sigma^p * F with
//   u(0) = 1, u'(0) = 0     v(0) = 0, v'(0) = 1,
// as series in sigma^(2+p); W(u, v) = 1.  Valid for p > -1; the denominators
// k(2+p)(k(2+p)-1) and (k(2+p)+1)k(2+p) never vanish there, so there is no
// resonance at either edge orientation.
void edge_series(double lamc, double p, double sigma, double& u, double& up, double& v,
                 double& vp) {
  const double e = 2.0 + p;
  const double w = lamc * std::pow(sigma, e);
  u = 1.0;
  up = 0.0;
  double term = 1.0;
  for (int k = 1; k <= 400; ++k) {
    double ke = k * e;
    term *= w / (ke * (ke - 1.0));
    u += term;
    up += term * ke / sigma;
    if (std::abs(term) < 1e-18 * std::abs(u)) break;
  }
  v = sigma;
  vp = 1.0;
  term = sigma;
  for (int k = 1; k <= 400; ++k) {
    double ke = k * e;
    term *= w / ((ke + 1.0) * ke);
    v += term;
    vp += term * (ke + 1.0) / sigma;
    if (std::abs(term) < 1e-18 * std::abs(v)) break;
  }
}

// Exact solution basis of f'' = lambda A f on one closed-form piece.  With
// zeta = s - lo (power) or zeta = 1 + q s (rational, zeta > 0), the pair
//   u = zeta^{1/2} I_nu(x),   w = zeta^{1/2} K_nu(x),   x = kap zeta^m,
//   m = (2+p)/2 or (2+r)/2,   nu = 1/(2|m|),   kap = sqrt(lambda c)/(|q| m|)
// solves the equation (only nu^2 enters, so nu >= 0 covers every exponent);
// for the exponential family the prefactor is absent and x = kap e^{q s / 2}
// with nu = 0.  eval() returns the I column scaled by e^{-x} and the K column
// by e^{+x}, so every entry stays representable; the s-wronskian u w' - u' w
// of the unscaled pair is the exact constant wr, used to invert transfers
// without cancellation.
struct SolBasis {
  enum Kind { exp_kind, pow_kind, rat_kind };
  Kind kind = exp_kind;
  double q = 1.0;  // d(zeta)/ds for the rational map; the rate for exponential
  double lo = 0.0;
  double m = 0.0;
  double nu = 0.0;
  double kap = 0.0;
  double wr = 0.0;

  static SolBasis make(const DensitySegment& seg, double lambda) {
    SolBasis b;
    if (seg.family == Family::exponential) {
      b.kind = exp_kind;
      b.q = seg.q;
      b.kap = 2.0 * std::sqrt(lambda * seg.c) / std::abs(seg.q);
      b.wr = -0.5 * seg.q;
    } else if (seg.family == Family::power) {
      b.kind = pow_kind;
      b.q = 1.0;
      b.lo = seg.lo;
      b.m = 0.5 * (2.0 + seg.p);
      b.nu = 0.5 / std::abs(b.m);
      b.kap = std::sqrt(lambda * seg.c) / std::abs(b.m);
      b.wr = -b.m;
    } else {
      b.kind = rat_kind;
      b.q = seg.q;
      b.m = 0.5 * (2.0 + seg.r);
      b.nu = 0.5 / std::abs(b.m);
      b.kap = std::sqrt(lambda * seg.c) / std::abs(seg.q * b.m);
      b.wr = -seg.q * b.m;
    }
    return b;
  }

  double zeta(double s) const { return kind == pow_kind ? s - lo : 1.0 + q * s; }

  double x_at(double s) const {
    if (kind == exp_kind) return kap * std::exp(0.5 * q * s);
    return kap * std::pow(zeta(s), m);
  }

  // inverse of x_at within the piece
  double s_at(double x) const {
    if (kind == exp_kind) return 2.0 / q * std::log(x / kap);
    double z = std::pow(x / kap, 1.0 / m);
    return kind == pow_kind ? lo + z : (z - 1.0) / q;
  }

  void eval(double s, double& ue, double& due, double& we, double& dwe, double& x) const {
    x = x_at(s);
    if (kind == exp_kind) {
      ue = bessel_i_scaled(0.0, x);
      due = 0.5 * q * x * bessel_i_scaled(1.0, x);
      we = bessel_k_scaled(0.0, x);
      dwe = -0.5 * q * x * bessel_k_scaled(1.0, x);
      return;
    }
    double z = zeta(s);
    double rz = std::sqrt(z);
    double co = 0.5 + nu * m;  // exactly 1 for m > 0, exactly 0 for m < 0
    double i0 = bessel_i_scaled(nu, x), i1 = bessel_i_scaled(nu + 1.0, x);
    double k0 = bessel_k_scaled(nu, x), k1 = bessel_k_scaled(nu + 1.0, x);
    ue = rz * i0;
    due = q / rz * (co * i0 + m * x * i1);
    we = rz * k0;
    dwe = q / rz * (co * k0 - m * x * k1);
  }
};

class Marcher {
 public:
  Marcher(const KreinString& str, double lambda, double eta, std::vector<Rec>* rec)
      : str_(str), lambda_(lambda), eta_(eta), rec_(rec) {
    note();
  }

  const State& state() const { return st_; }

  // March to S, applying every atom with position <= S (inclusive).
  void advance_to(double S) {
    double eps = 1e-15 * std::max(1.0, std::abs(S));
    while (st_.s < S - eps) {
      while (si_ + 1 < str_.segments.size() && str_.segments[si_].hi <= st_.s) ++si_;
      const DensitySegment& seg = str_.segments[si_];
      double stop = std::min(S, seg.hi);
      bool atom_here = ai_ < str_.atoms.size() && str_.atoms[ai_].s <= stop;
      if (atom_here) stop = str_.atoms[ai_].s;
      if (stop > st_.s) advance_interval(seg, st_.s, stop);
      st_.s = stop;
      if (atom_here) {
        apply_atom(str_.atoms[ai_].mass);
        ++ai_;
      }
    }
    st_.s = S;
    while (ai_ < str_.atoms.size() && str_.atoms[ai_].s <= S) {
      apply_atom(str_.atoms[ai_].mass);
      ++ai_;
    }
  }

  // Graded approach of a singular final rational piece in the gap coordinate
  // delta = R - s (exact z = |q| delta, immune to cancellation in 1 + q*s).
  void graded_step(const DensitySegment& seg, double delta0, double delta1) {
    double aq = std::abs(seg.q);
    if (seg.r == -2.0) {
      advance_euler(seg, aq * delta0, aq * delta1, str_.R - delta1);
      return;
    }
    if (bessel_ok(seg)) {
      advance_bessel(seg, str_.R - delta0, str_.R - delta1);
      return;
    }
    advance_rk4_delta(seg, delta0, delta1);
  }

  // True when the piece has the exact zeta^{1/2} Z_nu basis with an order the
  // bessel evaluator covers.  Negative-base rational pieces (integer r) and
  // the near-euler band |r+2| < 0.05 stay on the rk4 path.
  static bool bessel_ok(const DensitySegment& seg) {
    switch (seg.family) {
      case Family::exponential:
        return seg.q != 0.0;
      case Family::power:
        return seg.p != 0.0;
      case Family::rational_power:
        if (seg.q == 0.0 || seg.r == 0.0 || seg.r == -2.0) return false;
        if (1.0 + seg.q * seg.lo <= 0.0) return false;
        return std::abs(seg.r + 2.0) >= 0.05;
      default:
        return false;
    }
  }

 private:
  // ---- record/bookkeeping ----

  void note() {
    if (!rec_) return;
    if (!rec_->empty() && rec_->back().s == st_.s) {
      rec_->back() = {st_.s, st_.fn, st_.fnp, st_.fnp, st_.fd, st_.fdp, st_.fdp, st_.L};
      return;
    }
    rec_->push_back({st_.s, st_.fn, st_.fnp, st_.fnp, st_.fd, st_.fdp, st_.fdp, st_.L});
  }

  void apply_atom(double mass) {
    note();  // knot at the atom keeps the incoming derivative
    st_.fnp += lambda_ * mass * st_.fn;
    st_.fdp += lambda_ * mass * st_.fd;
    if (rec_) {
      Rec& r = rec_->back();
      r.fnp_out = st_.fnp;
      r.fdp_out = st_.fdp;
    }
  }

  void renorm() {
    double m = std::max(std::max(std::abs(st_.fn), std::abs(st_.fnp)),
                        std::max(std::abs(st_.fd), std::abs(st_.fdp)));
    if (m > kRenormAt) {
      st_.fn /= m;
      st_.fnp /= m;
      st_.fd /= m;
      st_.fdp /= m;
      st_.L += std::log(m);
    }
  }

  // ---- per-family handlers over [a, b] inside one segment ----

  void advance_interval(const DensitySegment& seg, double a, double b) {
    if (b <= a) return;
    if (lambda_ == 0.0 || seg.is_zero()) {
      st_.fn += st_.fnp * (b - a);
      st_.fd += st_.fdp * (b - a);
      st_.s = b;
      note();
      return;
    }
    switch (seg.family) {
      case Family::constant:
        advance_constant(seg.c, a, b);
        return;
      case Family::exponential:
        if (seg.q == 0.0)
          advance_constant(seg.c, a, b);
        else
          advance_bessel(seg, a, b);
        return;
      case Family::rational_power:
        if (seg.q == 0.0 || seg.r == 0.0) {
          advance_constant(seg.density(a), a, b);
          return;
        }
        if (seg.r == -2.0) {
          advance_euler(seg, 1.0 + seg.q * a, 1.0 + seg.q * b, b);
          return;
        }
        if (seg.singular_at_hi() && b >= seg.hi * (1.0 - 1e-14) && seg.r > -1.0) {
          advance_rk4_then_edge(seg, a, b);  // integrable blow-up: cross exactly
          return;
        }
        advance_smooth(seg, a, b);
        return;
      case Family::power:
        if (seg.p == 0.0) {
          advance_constant(seg.c, a, b);
          return;
        }
        if (a <= seg.lo) {
          double clam = lambda_ * seg.c;
          double delta = std::pow(kSeriesArg / clam, 1.0 / (2.0 + seg.p));
          double mid = std::min(b, seg.lo + delta);
          advance_series_left(seg, mid);
          if (mid < b) advance_smooth(seg, mid, b);
          return;
        }
        advance_smooth(seg, a, b);
        return;
      default:
        advance_rk4(seg, a, b);
        return;
    }
  }

  void advance_smooth(const DensitySegment& seg, double a, double b) {
    if (bessel_ok(seg))
      advance_bessel(seg, a, b);
    else
      advance_rk4(seg, a, b);
  }

  void advance_constant(double c, double a, double b) {
    double w = std::sqrt(lambda_ * c);
    double total = b - a;
    double grain = rec_ ? kRecordPhase : kMaxPhasePerTransfer;
    long long n = std::max(1LL, static_cast<long long>(std::ceil(w * total / grain)));
    double hh = total / n;
    double ch = std::cosh(w * hh), sh = std::sinh(w * hh);
    for (long long i = 0; i < n; ++i) {
      double fn = st_.fn * ch + st_.fnp * sh / w;
      double fnp = st_.fn * w * sh + st_.fnp * ch;
      double fd = st_.fd * ch + st_.fdp * sh / w;
      double fdp = st_.fd * w * sh + st_.fdp * ch;
      st_.fn = fn;
      st_.fnp = fnp;
      st_.fd = fd;
      st_.fdp = fdp;
      st_.s = (i + 1 == n) ? b : a + (i + 1) * hh;
      note();
      renorm();
    }
    st_.s = b;
  }

  // A = c (1+qs)^{-2}: Euler equation.  Exact transfer between z values of
  // matching sign; the power pair z^{beta+-} with beta(beta-1) = lambda c/q^2
  // is re-anchored each substep so both components stay resolved.
  void advance_euler(const DensitySegment& seg, double z0, double z1, double b_s) {
    double kappa = lambda_ * seg.c / (seg.q * seg.q);
    double dB = std::sqrt(1.0 + 4.0 * kappa);
    double bp = 0.5 * (1.0 + dB), bm = 0.5 * (1.0 - dB);
    double lr_total = std::log(z1 / z0);  // same sign inside a piece: ratio > 0
    int nsub = std::max(1, static_cast<int>(std::ceil(std::abs(lr_total) * dB / 13.8)));
    if (rec_)
      nsub = std::max(nsub, static_cast<int>(std::ceil(std::abs(lr_total) / kRecordLogRho)));
    nsub = std::min(nsub, 100000);
    double z_prev = z0;
    for (int k = 1; k <= nsub; ++k) {
      double zk = (k == nsub) ? z1 : z0 * std::exp(lr_total * k / nsub);
      double rho = zk / z_prev;
      double pp = std::pow(rho, bp), pm = std::pow(rho, bm);
      auto apply = [&](double& f, double& fp) {
        double D = fp * z_prev / seg.q;
        double al = (D - bm * f) / dB;
        double ga = (bp * f - D) / dB;
        f = al * pp + ga * pm;
        fp = (seg.q / zk) * (al * bp * pp + ga * bm * pm);
      };
      apply(st_.fn, st_.fnp);
      apply(st_.fd, st_.fdp);
      st_.s = (k == nsub) ? b_s : (zk - 1.0) / seg.q;
      z_prev = zk;
      note();
      renorm();
    }
    st_.s = b_s;
  }

  // Power piece entered at its left edge: exact series transfer through the
  // region where lambda*c*(s-lo)^{2+p} <= kSeriesArg.
  void advance_series_left(const DensitySegment& seg, double b) {
    double clam = lambda_ * seg.c;
    double delta = b - seg.lo;
    double f0n = st_.fn, d0n = st_.fnp, f0d = st_.fd, d0d = st_.fdp;
    auto land = [&](double sig) {
      double u, up, v, vp;
      edge_series(clam, seg.p, sig, u, up, v, vp);
      st_.fn = f0n * u + d0n * v;
      st_.fnp = f0n * up + d0n * vp;
      st_.fd = f0d * u + d0d * v;
      st_.fdp = f0d * up + d0d * vp;
      st_.s = seg.lo + sig;
      note();
    };
    if (rec_) {
      // knot density kRecordLogRho in log sigma, tightened to kRecordPhase in
      // the phase x = sqrt(lambda c sigma^{2+p}) / m once x is macroscopic;
      // the head cell [lo, lo + delta*1e-6] holds the non-cubic sigma^{2+p}
      // term below interpolation noise even as p -> -1
      double m = 0.5 * (2.0 + seg.p);
      double sig = delta * 1e-6;
      while (sig < delta * (1.0 - 1e-12)) {
        land(sig);
        double x = std::sqrt(clam * std::pow(sig, 2.0 + seg.p)) / m;
        double step = std::min(kRecordLogRho, kRecordPhase / std::max(m * x, 1e-300));
        sig *= std::exp(step);
      }
    }
    land(delta);
    st_.s = b;
    renorm();
  }

  // Exponential, power, and rational pieces: exact transfers in the
  // zeta^{1/2} Z_nu(x) basis.  Chunks are capped at kMaxPhasePerTransfer in x
  // (the columns carry e^{+-(x_b - x_a)}), plus knot-density caps when
  // recording.  Below kTinyPhase the lambda A term is an O(x^2) <= 1e-18
  // correction and the march switches to the affine step.
  void advance_bessel(const DensitySegment& seg, double a, double b) {
    SolBasis bb = SolBasis::make(seg, lambda_);
    double eps = 1e-15 * std::max(1.0, std::abs(b));
    double xb_all = bb.x_at(b);
    double s = a;
    long guard = 0;
    while (s < b - eps) {
      double xs = bb.x_at(s);
      if (!std::isfinite(xs) || !std::isfinite(xb_all))
        throw accuracy_error("bessel march: phase overflow",
                             st_.fn / std::max(std::abs(st_.fd), 1e-300));
      bool grow = xb_all >= xs;
      if (std::max(xs, xb_all) <= kTinyPhase) {
        advance_linear(seg, s, b);
        break;
      }
      if (grow && xs < kTinyPhase) {
        double smid = std::min(b, bb.s_at(kTinyPhase));
        advance_linear(seg, s, smid);
        s = smid;
        continue;
      }
      double cap = rec_ ? kRecordPhase : kMaxPhasePerTransfer;
      double s1 = b;
      if (std::abs(xb_all - xs) > cap) s1 = bb.s_at(grow ? xs + cap : xs - cap);
      if (!grow && bb.x_at(s1) < kTinyPhase) s1 = bb.s_at(kTinyPhase);
      if (rec_) {
        // keep knots log-dense in zeta (in x itself for the exponential map)
        double slog;
        if (bb.kind == SolBasis::exp_kind) {
          slog = s + 2.0 * kRecordLogRho / std::abs(bb.q);
        } else {
          double z = bb.zeta(s);
          bool zup = bb.kind == SolBasis::pow_kind || bb.q > 0.0;
          double z1 = z * std::exp(zup ? kRecordLogRho : -kRecordLogRho);
          slog = bb.kind == SolBasis::pow_kind ? bb.lo + z1 : (z1 - 1.0) / bb.q;
        }
        if (slog > s + eps) s1 = std::min(s1, slog);
      }
      if (!(s1 > s + 0.25 * eps)) s1 = b;
      s1 = std::min(s1, b);
      transfer_bessel(bb, s, s1);
      s = s1;
      st_.s = s;
      note();
      renorm();
      if (++guard > 100'000'000)
        throw accuracy_error("bessel march stalled",
                             st_.fn / std::max(std::abs(st_.fd), 1e-300));
    }
    st_.s = b;
  }

  void transfer_bessel(const SolBasis& bb, double sa, double sb) {
    double uea, duea, wea, dwea, xa;
    double ueb, dueb, web, dweb, xb;
    bb.eval(sa, uea, duea, wea, dwea, xa);
    bb.eval(sb, ueb, dueb, web, dweb, xb);
    double ep = std::exp(xb - xa), em = std::exp(xa - xb);
    auto prop = [&](double& f, double& fp) {
      double di = (dwea * f - wea * fp) / bb.wr;
      double dk = (uea * fp - duea * f) / bb.wr;
      f = di * ueb * ep + dk * web * em;
      fp = di * dueb * ep + dk * dweb * em;
    };
    prop(st_.fn, st_.fnp);
    prop(st_.fd, st_.fdp);
  }

  // Phase across [a, b] is below kTinyPhase: the solutions are affine up to a
  // relative 1e-18; one trapezoid mass correction keeps the slopes exact.
  void advance_linear(const DensitySegment& seg, double a, double b) {
    double h = b - a;
    double mm = lambda_ * seg.mass(a, b);
    auto lin = [&](double& f, double& fp) {
      double fmid = f + 0.5 * h * fp;
      double fp1 = fp + mm * fmid;
      f += 0.5 * h * (fp + fp1);
      fp = fp1;
    };
    lin(st_.fn, st_.fnp);
    lin(st_.fd, st_.fdp);
    st_.s = b;
    note();
    renorm();
  }

  // Weak right-edge singularity (rational, r in (-1,0), 1+q*hi = 0): rk4 up to
  // hi - delta, then one series transfer in sigma = hi - s lands on hi itself.
  void advance_rk4_then_edge(const DensitySegment& seg, double a, double b) {
    double aq = std::abs(seg.q);
    double ctil = seg.c * std::pow(aq, seg.r);
    double clam = lambda_ * ctil;
    double delta = std::min(0.5 * (b - a), std::pow(kSeriesArg / clam, 1.0 / (2.0 + seg.r)));
    double mid = b - delta;
    if (mid > a) advance_smooth(seg, a, mid);
    double u, up, v, vp;
    edge_series(clam, seg.r, delta, u, up, v, vp);
    auto cross = [&](double& f, double& fp) {
      // f(s) = F(hi - s): match (F, F') at sigma = delta, read off at sigma = 0
      double A = vp * f + v * fp;
      double B = -(up * f + u * fp);
      f = A;
      fp = -B;
    };
    cross(st_.fn, st_.fnp);
    cross(st_.fd, st_.fdp);
    st_.s = b;
    note();
    renorm();
  }

  double omega_at(const DensitySegment& seg, double s) const {
    return std::sqrt(lambda_ * std::max(seg.density(s), 0.0));
  }

  void advance_rk4(const DensitySegment& seg, double a, double b) {
    double s = a;
    long guard = 0;
    double eps = 1e-15 * std::max(1.0, std::abs(b));
    while (s < b - eps) {
      double h = b - s;
      double w = omega_at(seg, s);
      if (w > 0.0) h = std::min(h, eta_ / w);
      if (seg.family == Family::exponential && seg.q != 0.0)
        h = std::min(h, 0.5 / std::abs(seg.q));
      if (seg.family == Family::power && seg.p < 0.0 && s > seg.lo)
        h = std::min(h, 0.3 * (s - seg.lo));
      if (seg.family == Family::rational_power && seg.q != 0.0 && seg.r != 0.0) {
        double z = std::abs(1.0 + seg.q * s);
        if (seg.r < 0.0 && z > 0.0) h = std::min(h, 0.3 * z / std::abs(seg.q));
        h = std::min(h, 0.5 * (z + 1.0) / std::abs(seg.q * seg.r));
      }
      if (seg.family == Family::tabulated) {
        auto it = std::upper_bound(seg.knots.begin(), seg.knots.end(), s + eps);
        if (it != seg.knots.end()) h = std::min(h, *it - s);
      }
      for (int probe = 0; probe < 2; ++probe) {
        double w2 = omega_at(seg, std::min(b, s + h));
        if (w2 > 0.0 && h > eta_ / w2) h = eta_ / w2;
      }
      h = std::min(h, b - s);
      if (!(h > 0.0)) h = b - s;
      rk4_step(seg, s, h);
      s += h;
      st_.s = std::min(s, b);
      note();
      renorm();
      if (++guard > 100'000'000)
        throw accuracy_error("ode march stalled", st_.fn / std::max(std::abs(st_.fd), 1e-300));
    }
    st_.s = b;
  }

  void rk4_step(const DensitySegment& seg, double s, double h) {
    double A1 = lambda_ * seg.density(s);
    double A2 = lambda_ * seg.density(s + 0.5 * h);
    double A4 = lambda_ * seg.density(s + h);
    auto step = [&](double& u, double& v) {
      double k1u = v, k1v = A1 * u;
      double k2u = v + 0.5 * h * k1v, k2v = A2 * (u + 0.5 * h * k1u);
      double k3u = v + 0.5 * h * k2v, k3v = A2 * (u + 0.5 * h * k2u);
      double k4u = v + h * k3v, k4v = A4 * (u + h * k3u);
      u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
      v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    };
    step(st_.fn, st_.fnp);
    step(st_.fd, st_.fdp);
  }

  // rk4 in delta = R - s for a singular rational piece, -2 < r < 0:
  // F(delta) = f(R - delta) gives F_delta = -f', (f')_delta = -lambda A f.
  void advance_rk4_delta(const DensitySegment& seg, double d0, double d1) {
    double aq = std::abs(seg.q);
    double ctil = lambda_ * seg.c * std::pow(aq, seg.r);
    double d = d0;
    long guard = 0;
    while (d > d1 * (1.0 + 1e-15)) {
      double w = std::sqrt(ctil * std::pow(d, seg.r));
      double h = d - d1;
      if (w > 0.0) h = std::min(h, eta_ / w);
      h = std::min(h, 0.3 * d);
      if (!(h > 0.0)) break;
      double A1 = ctil * std::pow(d, seg.r);
      double A2 = ctil * std::pow(d - 0.5 * h, seg.r);
      double A4 = ctil * std::pow(d - h, seg.r);
      // s runs forward while delta = R - s shrinks: slopes are the usual
      // (f', lambda A f), only the density is sampled at the shrinking gap
      auto step = [&](double& u, double& v) {
        double k1u = v, k1v = A1 * u;
        double k2u = v + 0.5 * h * k1v, k2v = A2 * (u + 0.5 * h * k1u);
        double k3u = v + 0.5 * h * k2v, k3v = A2 * (u + 0.5 * h * k2u);
        double k4u = v + h * k3v, k4v = A4 * (u + h * k3u);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      };
      step(st_.fn, st_.fnp);
      step(st_.fd, st_.fdp);
      d -= h;
      st_.s = str_.R - d;
      note();
      renorm();
      if (++guard > 100'000'000)
        throw accuracy_error("graded march stalled",
                             st_.fn / std::max(std::abs(st_.fd), 1e-300));
    }
  }

  const KreinString& str_;
  double lambda_;
  double eta_;
  std::vector<Rec>* rec_;
  State st_;
  std::size_t si_ = 0;
  std::size_t ai_ = 0;
};

// A neumann end is the same measure extended by zero density: fold it into the
// natural form once so every algorithm sees two cases only.
KreinString canonical(const KreinString& str) {
  if (str.end != EndCondition::neumann_at_R) return str;
  KreinString out = str;
  DensitySegment tail;
  tail.lo = out.R;
  tail.hi = kInf;
  tail.family = Family::constant;
  tail.c = 0.0;
  out.segments.push_back(tail);
  out.R = kInf;
  out.end = EndCondition::natural;
  return out;
}

// Decay rate gamma = -g'/g at s = S of the solution of g'' = lambda A g that
// stays bounded toward +inf, for a rational tail c (1 + q s)^r with r inside
// the narrow band around the Euler exponent -2 where the exact Bessel order
// 1/|r+2| is out of reach.  In t = log(1 + q s) the scaled rate X = gamma z/q
// obeys the autonomous-looking Riccati flow
//   X' = X + X^2 - B(t),   B(t) = (lambda c / q^2) e^{(r+2) t},
// whose bounded branch is the attracting fixed point of the time-REVERSED
// flow: seed far away with the frozen-coefficient root |b_-(B)| (plus its
// first adiabatic correction) and march back; the seed error contracts like
// exp(-int (1 + 2X) dt), and both pieces of that integral have closed forms
// through v = sqrt(1 + 4B):  int |b_-| dt = (v - log(1+v)) / (r+2).
static double near_euler_rate(const DensitySegment& seg, double lambda, double S) {
  double eps = seg.r + 2.0;
  double zS = 1.0 + seg.q * S;
  double B0 = lambda * seg.c / (seg.q * seg.q);
  double tS = std::log(zS);
  double BS = B0 * std::exp(eps * tS);

  if (BS <= 5e-5) {
    // three Born terms around the linearized flow; the next one is ~5 B^4
    double a = 1.0 / (1.0 - eps);
    double b = a * a / (2.0 * eps - 1.0);
    double c3 = 2.0 * a * b / (3.0 * eps - 1.0);
    return seg.q * (((c3 * BS + b) * BS + a) * BS) / zS;
  }

  auto gv = [](double v) { return v - std::log1p(v); };
  double vS = std::sqrt(1.0 + 4.0 * BS);
  // pick the seed time t_T = t_S + w/|eps|: contraction dt + 2 int |b_-| dt
  // is (w + 2 |gv(v_T) - gv(v_S)|) / |eps|, monotone in w; aim for 36 e-folds
  double target = 36.0 * std::abs(eps);
  double sgn = eps > 0.0 ? 1.0 : -1.0;
  auto deficit = [&](double w) {
    double vT = std::sqrt(1.0 + 4.0 * BS * std::exp(sgn * w));
    return w + 2.0 * std::abs(gv(vT) - gv(vS)) - target;
  };
  double whi = 1.0;
  while (deficit(whi) < 0.0) whi *= 2.0;
  double wlo = 0.0;
  for (int i = 0; i < 60; ++i) {
    double wm = 0.5 * (wlo + whi);
    (deficit(wm) < 0.0 ? wlo : whi) = wm;
  }
  double span = whi / std::abs(eps);
  double BT = BS * std::exp(sgn * whi);

  auto root = [](double B) { return 0.5 * (std::sqrt(1.0 + 4.0 * B) - 1.0); };
  double Xmax = root(std::max(BS, BT));
  double h = std::min(0.3, 0.3 / (1.0 + 2.0 * Xmax));
  long n = static_cast<long>(std::ceil(span / h));
  h = span / static_cast<double>(n);
  double X = root(BT) + eps * BT / (1.0 + 4.0 * BT);
  double t = tS + span;
  auto f = [&](double tt, double x) { return x + x * x - B0 * std::exp(eps * tt); };
  for (long i = 0; i < n; ++i) {
    double k1 = f(t, X);
    double k2 = f(t - 0.5 * h, X - 0.5 * h * k1);
    double k3 = f(t - 0.5 * h, X - 0.5 * h * k2);
    double k4 = f(t - h, X - h * k3);
    X -= h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t -= h;
  }
  return seg.q * X / zS;
}

struct PsiOutcome {
  double psi = 0.0;
  std::vector<Rec> rec;
};

PsiOutcome psi_march(const KreinString& input, double lambda, const PsiOptions& opt,
                     bool record) {
  input.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("psi: lambda must be finite and >= 0");

  KreinString str = canonical(input);
  PsiOutcome out;
  std::vector<Rec>* rec = record ? &out.rec : nullptr;

  if (lambda == 0.0) {
    out.psi = std::isfinite(str.R) ? 1.0 / str.R : 0.0;
    if (record) {
      double S = std::isfinite(str.R) ? str.R : std::max(1.0, 2.0 * str.last_feature());
      Marcher m(str, 0.0, opt.eta, rec);
      m.advance_to(S);
    }
    return out;
  }

  if (str.end == EndCondition::dirichlet_at_R) {
    const DensitySegment& last = str.segments.back();
    Marcher m(str, lambda, opt.eta, rec);
    if (!last.singular_at_hi() || last.r > -1.0) {
      // bounded or integrable end: the ratio is finite at R itself
      m.advance_to(str.R);
      out.psi = m.state().fn / m.state().fd;
      return out;
    }
    // non-integrable end, r <= -1: march the bulk, then read the limit of
    // f_N/f_D at R off the exact basis of the end piece.  As z -> 0 the
    // member zeta^{1/2} K_nu(x) tends to a constant for r in (-2,-1] (x -> 0)
    // while zeta^{1/2} I_nu(x) vanishes, so the ratio of K coefficients is the
    // limit; for r < -2 the phase x diverges and the I coefficients take over.
    double approach = last.lo;
    if (!str.atoms.empty()) approach = std::max(approach, str.atoms.back().s);
    double s0 = std::max(0.5 * str.R, 0.5 * (approach + str.R));
    m.advance_to(s0);
    double dfloor = 8.0 * 2.3e-16 * std::max(str.R, 1.0);

    bool solved = false;
    if (Marcher::bessel_ok(last)) {
      SolBasis bb = SolBasis::make(last, lambda);
      bool endk = last.r > -2.0;
      // read off where the target column is well conditioned: x of order one
      // when the K part survives, deep in the I-dominated zone otherwise
      double xgoal = endk ? 1.0 : 17.0;
      double x0 = bb.x_at(m.state().s);
      if (endk ? (x0 > xgoal) : (x0 < xgoal)) {
        double zgoal = std::pow(xgoal / bb.kap, 1.0 / bb.m);
        double sgoal = (zgoal - 1.0) / last.q;
        if (sgoal > m.state().s && str.R - sgoal > dfloor) {
          m.advance_to(sgoal);
          x0 = bb.x_at(m.state().s);
        }
      }
      if (endk ? (x0 <= 6.0) : (x0 >= 17.0)) {
        double ue, due, we, dwe, xx;
        bb.eval(m.state().s, ue, due, we, dwe, xx);
        const State& st = m.state();
        double num, den;
        if (endk) {
          num = ue * st.fnp - due * st.fn;
          den = ue * st.fdp - due * st.fd;
        } else {
          num = dwe * st.fn - we * st.fnp;
          den = dwe * st.fd - we * st.fdp;
        }
        out.psi = num / den;
        solved = true;
      }
    }

    if (record || !solved) {
      // graded halvings toward R: the knots resolve phi near the end, and when
      // no exact basis applies the stabilized ratio is the answer
      double delta0 = str.R - m.state().s;
      int jmax = 54;
      {
        double span = delta0 / dfloor;
        if (span > 1.0) jmax = std::min(jmax, static_cast<int>(std::floor(std::log2(span))));
      }
      double ratio = m.state().fn / m.state().fd;
      double delta = delta0;
      int consec = 0;
      for (int j = 1; j <= jmax; ++j) {
        double dnext = delta0 * std::pow(0.5, j);
        m.graded_step(last, delta, dnext);
        delta = dnext;
        double rj = m.state().fn / m.state().fd;
        double rel = std::abs(rj - ratio) / std::max(std::abs(rj), 1e-300);
        ratio = rj;
        if (rel <= std::max(0.25 * opt.tol, 2e-15))
          ++consec;
        else
          consec = 0;
        if (consec >= 2 && j >= 6) break;
      }
      if (!solved) out.psi = ratio;
    }
    return out;
  }

  // natural string: 1/psi = int_0^inf f_N^{-2} = f_D(S)/f_N(S) + tail(S): the
  // first part is the exact partial integral (wronskian of the pair), and the
  // tail has a closed form because past the last feature the density is a
  // single analytic piece.  If g solves g'' = lambda A g and stays bounded as
  // s -> inf then W = f_N g' - f_N' g is constant and (g/f_N)' = -W/f_N^2, so
  //   int_S^inf f_N^{-2} = -g(S) / (W f_N(S)).
  // W >= 0 would mean f_N does not outgrow g: the integral diverges, psi = 0.
  double sstar = str.last_feature();
  const DensitySegment& tailseg = str.segments.back();

  Marcher m(str, lambda, opt.eta, rec);
  m.advance_to(sstar);
  double S = sstar;

  double g = 1.0, dg = 0.0;  // zero tail: g = 1
  if (!tailseg.is_zero()) {
    bool flat = tailseg.family == Family::constant ||
                (tailseg.family == Family::exponential && tailseg.q == 0.0) ||
                (tailseg.family == Family::power && tailseg.p == 0.0) ||
                (tailseg.family == Family::rational_power &&
                 (tailseg.q == 0.0 || tailseg.r == 0.0));
    if (flat) {
      dg = -std::sqrt(lambda * tailseg.c);
    } else if (tailseg.family == Family::rational_power && tailseg.r == -2.0) {
      // Euler tail: g = (z/z_S)^{b_-} exactly
      double bm = 0.5 * (1.0 - std::sqrt(1.0 + 4.0 * lambda * tailseg.c /
                                                   (tailseg.q * tailseg.q)));
      dg = tailseg.q * bm / (1.0 + tailseg.q * S);
    } else if (tailseg.family == Family::rational_power &&
               std::abs(tailseg.r + 2.0) < 0.05) {
      dg = -near_euler_rate(tailseg, lambda, S);
    } else {
      SolBasis bb = SolBasis::make(tailseg, lambda);
      bool grow = tailseg.family == Family::exponential ? tailseg.q > 0.0
                                                        : bb.m > 0.0;
      double ue, due, we, dwe, xx;
      if (grow) {
        // K column decays; step inside until its argument is moderate (the
        // piece may open with x = 0, where K blows up)
        if (bb.x_at(S) < 0.5) {
          S = bb.s_at(0.5);
          m.advance_to(S);
        }
        bb.eval(S, ue, due, we, dwe, xx);
        g = we;
        dg = dwe;  // common e^{-x} factor drops out of -g/(W f_N)
      } else {
        // I column is the bounded one when x -> 0 along the tail
        double x0 = bb.x_at(S);
        if (x0 <= kTinyPhase) {
          // series head: I column is 1 + O(x^2) with an exactly known slope
          dg = tailseg.family == Family::exponential
                   ? 0.25 * tailseg.q * x0 * x0
                   : 0.5 * tailseg.q * bb.m * x0 * x0 /
                         ((bb.nu + 1.0) * bb.zeta(S));
        } else {
          bb.eval(S, ue, due, we, dwe, xx);
          g = ue;
          dg = due;  // common e^{+x} factor drops out
        }
      }
    }
  }

  {
    const State& st = m.state();
    double W = st.fn * dg - st.fnp * g;
    double inv = W < 0.0 ? st.fd / st.fn - g * std::exp(-2.0 * st.L) / (W * st.fn)
                         : kInf;
    out.psi = std::isinf(inv) ? 0.0 : 1.0 / inv;
  }

  if (record && !tailseg.is_zero()) {
    // extend the march so the profile of phi = f_N - psi f_D stays resolved:
    // march until phi is dead (cancellation), absolutely tiny, or the profile
    // has a generous span AND the leftover tail energy -phi phi' (which also
    // bounds lambda times the leftover int A phi^2) is negligible against psi.
    // Algebraic tails decay slowly, but the geometric stepping reaches any
    // horizon in a few exact transfers.
    double span = std::max(S - sstar, 10.0 / std::sqrt(lambda));
    double ext_cap = sstar + std::max(1e12, 8.0 * span);
    double Sext = S;
    while (Sext < ext_cap) {
      const State& st = m.state();
      double phis = st.fn - out.psi * st.fd;
      double ratio = std::abs(phis) / std::max(st.fn, 1e-300);
      if (ratio < kCancelGuard && st.fn > 10.0) break;
      double lphi = st.L + std::log(std::max(std::abs(phis), 1e-300));
      if (lphi < std::log(1e-12)) break;
      if (Sext >= sstar + 8.0 * span) {
        double dphis = st.fnp - out.psi * st.fdp;
        bool flat = dphis >= 0.0;  // true slope is <= 0: this is the noise floor
        if (!flat) {
          double ltail = 2.0 * st.L + std::log(std::max(phis, 1e-300)) +
                         std::log(-dphis);
          flat = ltail <= std::log(1e-11 * std::max(out.psi, 1e-30));
        }
        if (flat) break;
      }
      Sext = std::min(ext_cap, Sext + std::max(span, Sext - sstar));
      m.advance_to(Sext);
    }
  }
  return out;
}

PhiProfile assemble(double lambda, double psi_val, const std::vector<Rec>& rec) {
  PhiProfile p;
  p.lambda = lambda;
  p.psi_value = psi_val;
  bool dead = false;
  auto scaled = [](double L, double x) {
    return x == 0.0 ? 0.0 : std::copysign(std::exp(L + std::log(std::abs(x))), x);
  };
  for (const Rec& r : rec) {
    if (!p.s.empty() && r.s <= p.s.back()) continue;  // rounding duplicates near R
    double phis = r.fn - psi_val * r.fd;
    double ratio = std::abs(phis) / std::max(r.fn, 1e-300);
    if (!dead && ratio < kCancelGuard && r.fn > 10.0) {
      dead = true;
      p.clamped = true;
      p.clamp_from = r.s;
    }
    double val = 0.0, dvi = 0.0, dvo = 0.0;
    if (!dead) {
      if (phis < 0.0 && ratio <= 1e-10) phis = 0.0;  // harmless round-off negatives
      val = scaled(r.L, phis);
      dvi = scaled(r.L, r.fnp_in - psi_val * r.fdp_in);
      dvo = scaled(r.L, r.fnp_out - psi_val * r.fdp_out);
    }
    p.s.push_back(r.s);
    p.phi.push_back(val);
    p.dphi.push_back(dvo);
    p.dphi_in.push_back(dvi);
  }
  return p;
}

}  // namespace

double StringSolution::fn_at(std::size_t i) const { return fn[i] * std::exp(log_scale[i]); }
double StringSolution::ratio_at(std::size_t i) const { return fd[i] / fn[i]; }

StringSolution solve_fundamental(const KreinString& str, double lambda, double s_max) {
  str.validate();
  if (!(lambda >= 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("solve_fundamental: lambda must be finite and >= 0");
  if (!(s_max > 0.0) || !std::isfinite(s_max))
    throw std::invalid_argument("solve_fundamental: s_max must be positive and finite");
  KreinString c = canonical(str);
  if (s_max > c.R)
    throw std::invalid_argument("solve_fundamental: s_max beyond the string end");
  std::vector<Rec> rec;
  Marcher m(c, lambda, PsiOptions{}.eta, &rec);
  m.advance_to(s_max);
  StringSolution out;
  out.lambda = lambda;
  for (const Rec& r : rec) {
    out.s.push_back(r.s);
    out.fn.push_back(r.fn);
    out.fnp.push_back(r.fnp_out);
    out.fd.push_back(r.fd);
    out.fdp.push_back(r.fdp_out);
    out.log_scale.push_back(r.L);
  }
  return out;
}

double psi(const KreinString& str, double lambda, const PsiOptions& opt) {
  return psi_march(str, lambda, opt, false).psi;
}

double psi_at_zero(const KreinString& str) {
  str.validate();
  return str.end == EndCondition::dirichlet_at_R ? 1.0 / str.R : 0.0;
}

double PhiProfile::value(double sq) const {
  if (s.empty()) return 0.0;
  if (sq <= s.front()) return phi.front();
  if (sq >= s.back()) return std::max(phi.back() + dphi.back() * (sq - s.back()), 0.0);
  auto it = std::upper_bound(s.begin(), s.end(), sq);
  std::size_t i = static_cast<std::size_t>(it - s.begin()) - 1;
  double h = s[i + 1] - s[i];
  if (h <= 0.0) return phi[i];
  double t = (sq - s[i]) / h;
  double h00 = (1.0 + 2.0 * t) * (1.0 - t) * (1.0 - t);
  double h10 = t * (1.0 - t) * (1.0 - t);
  double h01 = t * t * (3.0 - 2.0 * t);
  double h11 = t * t * (t - 1.0);
  return h00 * phi[i] + h10 * h * dphi[i] + h01 * phi[i + 1] + h11 * h * dphi_in[i + 1];
}

PhiProfile phi(const KreinString& str, double lambda, const PsiOptions& opt) {
  PsiOutcome oc = psi_march(str, lambda, opt, true);
  return assemble(lambda, oc.psi, oc.rec);
}

namespace {

// ---- energy quadrature: exact per-cell integrals where the family admits
// closed forms, endpoint-matched quadratic fit against exact moments else ----

struct CellEnergy {
  double mass = 0.0;  // int A phi^2 over the cell
  double grad = 0.0;  // int (phi')^2 over the cell
};

CellEnergy cell_constant(double c, double lambda, double h, double phi0, double d0) {
  CellEnergy ce;
  double w = std::sqrt(lambda * c);
  double x = w * h;
  double s2 = std::sinh(2.0 * x), c2 = std::cosh(2.0 * x);
  double Icc = 0.5 * h + s2 / (4.0 * w);
  double Iss = -0.5 * h + s2 / (4.0 * w);
  double Ics = (c2 - 1.0) / (4.0 * w);
  double b = d0 / w;
  ce.mass = c * (phi0 * phi0 * Icc + 2.0 * phi0 * b * Ics + b * b * Iss);
  ce.grad = phi0 * phi0 * w * w * Iss + 2.0 * phi0 * d0 * w * Ics + d0 * d0 * Icc;
  return ce;
}

CellEnergy cell_euler(const DensitySegment& seg, double lambda, double s0, double s1,
                      double phi0, double d0) {
  CellEnergy ce;
  double z0 = 1.0 + seg.q * s0, z1 = 1.0 + seg.q * s1;
  if (std::abs(z0) < 1e-300 || std::abs(z1) < 1e-300) return ce;
  double kappa = lambda * seg.c / (seg.q * seg.q);
  double dB = std::sqrt(1.0 + 4.0 * kappa);
  double bp = 0.5 * (1.0 + dB), bm = 0.5 * (1.0 - dB);
  double rho1 = z1 / z0;
  double D = d0 * z0 / seg.q;
  double al = (D - bm * phi0) / dB;
  double ga = (bp * phi0 - D) / dB;
  double Ip = (std::pow(rho1, dB) - 1.0) / dB;
  double Im = -(std::pow(rho1, -dB) - 1.0) / dB;
  double lr = std::log(rho1);
  ce.mass = (seg.c / (seg.q * z0)) * (al * al * Ip + 2.0 * al * ga * lr + ga * ga * Im);
  ce.grad = (seg.q / z0) * (al * al * bp * bp * Ip + 2.0 * al * ga * bp * bm * lr +
                            ga * ga * bm * bm * Im);
  return ce;
}

// Exact cell energies on a piece with the zeta^{1/2} Z_nu(x) basis.  In the
// phase variable the mass integral has the classical primitive
//   int x Z^2 dx = ((x^2 + nu^2) Z^2 - x^2 Z'^2) / 2
// for any solution Z of the modified equation, and the pullback to s gives
//   int lambda A phi^2 ds = pref * [primitive],  pref = q m  (q/2 for the
// exponential family); the gradient part follows by parts from the ODE.
// Eligible only away from x -> 0, where the primitive's two leading terms
// cancel; the caller screens the cell's phase range first.
CellEnergy cell_bessel(const DensitySegment& seg, double lambda, double s0, double s1,
                       double phi0, double d0, double phi1, double d1) {
  SolBasis bb = SolBasis::make(seg, lambda);
  auto prim = [&](double s, double f, double fp) {
    double x = bb.x_at(s);
    double Z, dZ;
    if (bb.kind == SolBasis::exp_kind) {
      Z = f;
      dZ = fp / (0.5 * bb.q * x);
    } else {
      double z = bb.zeta(s);
      double rz = std::sqrt(z);
      Z = f / rz;
      dZ = (fp - 0.5 * bb.q * f / z) * rz / (bb.q * bb.m * x);
    }
    return 0.5 * ((x * x + bb.nu * bb.nu) * Z * Z - x * x * dZ * dZ);
  };
  double pref = bb.kind == SolBasis::exp_kind ? 0.5 * bb.q : bb.q * bb.m;
  CellEnergy ce;
  ce.mass = pref * (prim(s1, phi1, d1) - prim(s0, phi0, d0)) / lambda;
  ce.grad = phi1 * d1 - phi0 * d0 - lambda * ce.mass;
  return ce;
}

// Truncated coefficient lists of the edge basis for one power segment.
struct EdgeBasis {
  double e;
  std::vector<double> a, b;  // u = sum a_k sig^{k e};  v = sum b_k sig^{1 + k e}
  EdgeBasis(double lamc, double p, double sigmax) : e(2.0 + p) {
    a = {1.0};
    double t = 1.0;
    for (int k = 1; k <= 120; ++k) {
      double ke = k * e;
      t *= lamc / (ke * (ke - 1.0));
      a.push_back(t);
      if (std::abs(t) * std::pow(sigmax, ke) < 1e-18) break;
    }
    b = {1.0};
    t = 1.0;
    for (int k = 1; k <= 120; ++k) {
      double ke = k * e;
      t *= lamc / ((ke + 1.0) * ke);
      b.push_back(t);
      if (std::abs(t) * std::pow(sigmax, ke + 1.0) < 1e-18) break;
    }
  }
  void eval(double sig, double& u, double& up, double& v, double& vp) const {
    u = 0.0;
    up = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      double ke = double(k) * e;
      double pw = std::pow(sig, ke);
      u += a[k] * pw;
      if (k > 0) up += a[k] * ke * pw / sig;
    }
    v = 0.0;
    vp = 0.0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      double ke = double(k) * e;
      double pw = std::pow(sig, ke + 1.0);
      v += b[k] * pw;
      vp += b[k] * (ke + 1.0) * pw / sig;
    }
  }
};

CellEnergy cell_series(const EdgeBasis& eb, double c, double p, double sig0, double sig1,
                       double phi0, double d0) {
  // phi = A u + B v in the segment's sigma coordinate; decompose at sig0
  double A, B;
  if (sig0 <= 0.0) {
    A = phi0;
    B = d0;
  } else {
    double u, up, v, vp;
    eb.eval(sig0, u, up, v, vp);
    double wr = u * vp - up * v;
    A = (vp * phi0 - v * d0) / wr;
    B = (u * d0 - up * phi0) / wr;
  }
  CellEnergy ce;
  const double e = eb.e;
  auto ipow = [&](double expo) {
    double e1 = expo + 1.0;
    double hi = std::pow(sig1, e1);
    double lo = sig0 > 0.0 ? std::pow(sig0, e1) : 0.0;
    return (hi - lo) / e1;
  };
  const auto& a = eb.a;
  const auto& b = eb.b;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j)
      ce.mass += A * A * a[i] * a[j] * c * ipow(p + double(i + j) * e);
    for (std::size_t j = 0; j < b.size(); ++j)
      ce.mass += 2.0 * A * B * a[i] * b[j] * c * ipow(p + double(i + j) * e + 1.0);
  }
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      ce.mass += B * B * b[i] * b[j] * c * ipow(p + double(i + j) * e + 2.0);
  for (std::size_t i = 1; i < a.size(); ++i)
    for (std::size_t j = 1; j < a.size(); ++j)
      ce.grad += A * A * a[i] * (double(i) * e) * a[j] * (double(j) * e) *
                 ipow(double(i + j) * e - 2.0);
  for (std::size_t i = 1; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      ce.grad += 2.0 * A * B * a[i] * (double(i) * e) * b[j] * (double(j) * e + 1.0) *
                 ipow(double(i + j) * e - 1.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      ce.grad += B * B * b[i] * (double(i) * e + 1.0) * b[j] * (double(j) * e + 1.0) *
                 ipow(double(i + j) * e);
  return ce;
}

CellEnergy cell_fit(const DensitySegment& seg, double s0, double s1, double phi0, double d0,
                    double phi1) {
  CellEnergy ce;
  double h = s1 - s0;
  double C = (phi1 - phi0 - d0 * h) / (h * h);
  double P0 = phi0 * phi0;
  double P1 = 2.0 * phi0 * d0;
  double P2 = d0 * d0 + 2.0 * phi0 * C;
  double P3 = 2.0 * d0 * C;
  double P4 = C * C;
  ce.mass = P0 * seg.moment(s0, s1, s0, 0) + P1 * seg.moment(s0, s1, s0, 1) +
            P2 * seg.moment(s0, s1, s0, 2) + P3 * seg.moment(s0, s1, s0, 3) +
            P4 * seg.moment(s0, s1, s0, 4);
  ce.grad = d0 * d0 * h + 2.0 * d0 * C * h * h + (4.0 / 3.0) * C * C * h * h * h;
  return ce;
}

struct EnergyTotals {
  double mass = 0.0;
  double grad = 0.0;
};

EnergyTotals profile_totals(const KreinString& input, const PhiProfile& prof) {
  KreinString str = canonical(input);
  EnergyTotals tot;
  const double lambda = prof.lambda;
  std::size_t si = 0;
  std::vector<EdgeBasis> bases;
  std::vector<const DensitySegment*> base_seg;

  for (std::size_t i = 0; i + 1 < prof.s.size(); ++i) {
    double s0 = prof.s[i], s1 = prof.s[i + 1];
    if (s1 <= s0) continue;
    double phi0 = prof.phi[i], d0 = prof.dphi[i], phi1 = prof.phi[i + 1];
    double d1 = prof.dphi_in[i + 1];
    if (phi0 == 0.0 && phi1 == 0.0 && d0 == 0.0) continue;
    double sm = 0.5 * (s0 + s1);
    while (si + 1 < str.segments.size() && str.segments[si].hi <= sm) ++si;
    const DensitySegment& seg = str.segments[si];
    auto bessel_cell_ok = [&]() {
      if (!Marcher::bessel_ok(seg)) return false;
      SolBasis bb = SolBasis::make(seg, lambda);
      double xa = bb.x_at(s0), xb = bb.x_at(s1);
      double floor = std::max(0.05, 0.05 * bb.nu);
      return std::isfinite(xa) && std::isfinite(xb) && std::min(xa, xb) >= floor;
    };
    CellEnergy ce;
    if (seg.is_zero()) {
      ce.grad = d0 * d0 * (s1 - s0);
    } else if (lambda == 0.0) {
      ce = cell_fit(seg, s0, s1, phi0, d0, phi1);
    } else if (seg.family == Family::constant) {
      ce = cell_constant(seg.c, lambda, s1 - s0, phi0, d0);
    } else if (seg.family == Family::rational_power && seg.r == -2.0) {
      ce = cell_euler(seg, lambda, s0, s1, phi0, d0);
    } else if (seg.family == Family::power &&
               lambda * seg.c * std::pow(s1 - seg.lo, 2.0 + seg.p) < 1.5 * kSeriesArg) {
      std::size_t bi = 0;
      while (bi < base_seg.size() && base_seg[bi] != &seg) ++bi;
      if (bi == base_seg.size()) {
        // size the basis by the largest sigma any eligible cell can reach, so
        // the term cutoff works in finite arithmetic
        double sigmax = std::pow(1.5 * kSeriesArg / (lambda * seg.c), 1.0 / (2.0 + seg.p));
        if (std::isfinite(seg.hi)) sigmax = std::min(sigmax, seg.hi - seg.lo);
        bases.emplace_back(lambda * seg.c, seg.p, sigmax);
        base_seg.push_back(&seg);
      }
      ce = cell_series(bases[bi], seg.c, seg.p, s0 - seg.lo, s1 - seg.lo, phi0, d0);
    } else if (seg.family != Family::tabulated && bessel_cell_ok()) {
      ce = cell_bessel(seg, lambda, s0, s1, phi0, d0, phi1, d1);
    } else {
      ce = cell_fit(seg, s0, s1, phi0, d0, phi1);
    }
    tot.mass += ce.mass;
    tot.grad += ce.grad;
  }
  for (const Atom& at : str.atoms) {
    double pv = prof.value(at.s);
    tot.mass += at.mass * pv * pv;
  }
  return tot;
}

}  // namespace

double profile_energy(const KreinString& str, const PhiProfile& prof) {
  EnergyTotals t = profile_totals(str, prof);
  return t.grad + prof.lambda * t.mass;
}

double phi_mass_integral(const KreinString& str, double lambda, const PsiOptions& opt) {
  PhiProfile prof = phi(str, lambda, opt);
  return profile_totals(str, prof).mass;
}

double string_energy(const KreinString& input, double lambda, const std::vector<double>& nodes,
                     const std::vector<double>& values) {
  input.validate();
  if (nodes.size() != values.size() || nodes.size() < 2)
    throw std::invalid_argument("string_energy: need matching nodes/values, length >= 2");
  if (std::abs(nodes.front()) > 1e-14 || std::abs(values.front() - 1.0) > 1e-12)
    throw std::invalid_argument("string_energy: competitor must start at f(0) = 1");
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    if (!(nodes[i + 1] > nodes[i]))
      throw std::invalid_argument("string_energy: nodes must increase");
  if (nodes.back() > input.R * (1.0 + 1e-12))
    throw std::invalid_argument("string_energy: nodes beyond the string end");

  KreinString str = canonical(input);
  if (str.end == EndCondition::dirichlet_at_R && std::abs(values.back()) > 0.0)
    return kInf;  // the terminating end enforces f(R) = 0 (constant extension)

  double grad = 0.0, mass = 0.0;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    double h = nodes[i + 1] - nodes[i];
    double slope = (values[i + 1] - values[i]) / h;
    grad += slope * slope * h;
    double P0 = values[i] * values[i];
    double P1 = 2.0 * values[i] * slope;
    double P2 = slope * slope;
    for (const auto& seg : str.segments) {
      double a = std::max(nodes[i], seg.lo);
      double b = std::min(nodes[i + 1], seg.hi);
      if (b <= a) continue;
      mass += P0 * seg.moment(a, b, nodes[i], 0) + P1 * seg.moment(a, b, nodes[i], 1) +
              P2 * seg.moment(a, b, nodes[i], 2);
    }
  }
  double fend = values.back();
  if (fend != 0.0) {
    for (const auto& seg : str.segments) {
      double a = std::max(nodes.back(), seg.lo);
      if (seg.hi <= a) continue;
      double mm = seg.mass(a, seg.hi);
      if (std::isinf(mm)) return kInf;
      mass += fend * fend * mm;
    }
  }
  auto f_at = [&](double s) {
    if (s <= nodes.front()) return values.front();
    if (s >= nodes.back()) return values.back();
    auto it = std::upper_bound(nodes.begin(), nodes.end(), s);
    std::size_t i = static_cast<std::size_t>(it - nodes.begin()) - 1;
    double t = (s - nodes[i]) / (nodes[i + 1] - nodes[i]);
    return values[i] + t * (values[i + 1] - values[i]);
  };
  for (const Atom& at : str.atoms) {
    double fv = f_at(at.s);
    mass += at.mass * fv * fv;
  }
  return grad + lambda * mass;
}

CoefficientA shift_string(const CoefficientA& coeff, double mu, double tol,
                          std::size_t n_knots) {
  coeff.validate();
  if (mu == 0.0) return coeff;
  if (!(mu > 0.0)) throw std::invalid_argument("shift_string: mu must be >= 0");
  if (n_knots < 16) throw std::invalid_argument("shift_string: n_knots too small");

  KreinString str = from_coefficient_a(coeff);
  PsiOptions opt;
  opt.tol = std::min(tol, 1e-9);
  PhiProfile prof = phi(str, mu, opt);

  double s_cov = 0.9 * prof.s.back();
  if (prof.clamped) s_cov = std::min(s_cov, 0.9 * prof.clamp_from);

  // largest t the profile covers: sigma(T) <= s_cov
  double T;
  if (std::isfinite(coeff.r) && sigma_of_t(coeff, coeff.r * (1.0 - 1e-9)) <= s_cov) {
    T = coeff.r * (1.0 - 1e-9);
  } else {
    double hi = std::isfinite(coeff.r) ? coeff.r * (1.0 - 1e-9) : 1.0;
    if (!std::isfinite(coeff.r)) {
      while (sigma_of_t(coeff, hi) < s_cov && hi < 1e12) hi *= 2.0;
    }
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      double mid = 0.5 * (lo + hi);
      if (sigma_of_t(coeff, mid) > s_cov)
        hi = mid;
      else
        lo = mid;
    }
    T = lo;
  }
  if (!(T > 0.0))
    throw accuracy_error("shift_string: profile does not cover the coefficient", 0.0);

  CoefficientA out;
  out.r = T;
  DensitySegment tab;
  tab.family = Family::tabulated;
  tab.lo = 0.0;
  tab.hi = T;

  const DensitySegment& first = coeff.segments.front();
  double t_lo = 0.0;
  if (first.family == Family::power && first.p != 0.0) {
    // keep the power head in closed form; phi_mu(sigma(t)) -> 1 as t -> 0
    t_lo = std::min(0.05 * T, 0.25 * (std::min(first.hi, T) - first.lo));
    DensitySegment head = first;
    head.hi = t_lo;
    out.segments.push_back(head);
    tab.lo = t_lo;
  }

  double t_first = t_lo > 0.0 ? t_lo : T * 1e-7;
  std::vector<double> tg = geometric_grid(t_first, T, n_knots);
  if (t_lo == 0.0) {
    tab.knots.push_back(0.0);
    tab.values.push_back(first.density(0.0));  // phi_mu(0) = 1
  }
  for (double t : tg) {
    double pv = prof.value(sigma_of_t(coeff, t));
    double bt = coeff.value(t) * pv * pv;
    if (!(bt > 0.0)) bt = tab.values.empty() ? 1e-300 : tab.values.back() * 1e-6;
    tab.knots.push_back(t);
    tab.values.push_back(bt);
  }
  out.segments.push_back(std::move(tab));
  out.validate();
  return out;
}

}  // namespace krein
