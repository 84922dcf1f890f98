#pragma once

// Embedded Runge-Kutta 5(4) integrator (Dormand-Prince) with the
// continuous extension of Hairer, Norsett & Wanner, step-size control on a
// mixed absolute/relative error norm, and step rejection when the
// right-hand side cannot be evaluated.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <utility>

#include "errors.hpp"

namespace carbkin::ode {

template <std::size_t N>
using State = std::array<double, N>;

/// Thrown by a right-hand side that cannot be evaluated at the trial
/// state. The integrator retries with a smaller step.
class RhsFailure : public Error {
public:
    using Error::Error;
};

template <std::size_t N>
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double t, const State<N>& y)
        : Error(what + " at t = " + std::to_string(t))
        , t_(t)
        , y_(y)
    {}

    double last_time() const noexcept { return t_; }
    const State<N>& last_state() const noexcept { return y_; }

private:
    double t_;
    State<N> y_;
};

struct Options {
    double rtol = 1e-8;
    double atol = 1e-12;
    double initial_step = 0.0; // 0: chosen from the span
    double min_step = 1e-12;   // relative to |t_end - t0|
    double max_step = 0.0;     // 0: unbounded
    long max_steps = 1'000'000;
};

/// One accepted step together with its dense-output polynomial.
template <std::size_t N>
class Step {
public:
    double t_old = 0.0;
    double t_new = 0.0;
    State<N> y_old{};
    State<N> y_new{};

    /// 4th-order interpolant on [t_old, t_new].
    State<N> at(double t) const
    {
        const double h = t_new - t_old;
        const double theta = h == 0.0 ? 1.0 : (t - t_old) / h;
        const double theta1 = 1.0 - theta;
        State<N> y;
        for (std::size_t i = 0; i < N; ++i) {
            y[i] = rcont_[0][i]
                   + theta
                         * (rcont_[1][i]
                            + theta1 * (rcont_[2][i] + theta * (rcont_[3][i] + theta1 * rcont_[4][i])));
        }
        return y;
    }

    /// Replaces the end of the step, e.g. when an event truncates it. The
    /// interpolant is kept on the original interval.
    void truncate(double t, const State<N>& y)
    {
        t_new = t;
        y_new = y;
        truncated_ = true;
    }

    bool truncated() const noexcept { return truncated_; }

private:
    template <std::size_t M, class Rhs, class Observer>
    friend void integrate(Rhs&&, double, State<M>, double, const Options&, Observer&&);

    std::array<State<N>, 5> rcont_{};
    bool truncated_ = false;
};

namespace tableau {
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                        a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
inline constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                        d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                        d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
} // namespace tableau

/// Integrates y' = rhs(t, y) from t0 to t_end.
///
/// `observer(step)` is called after every accepted step with a mutable
/// Step; it may call step.truncate() to end the step early (the
/// integrator then continues from the truncated point) and returns false
/// to stop the integration.
template <std::size_t N, class Rhs, class Observer>
void integrate(Rhs&& rhs, double t0, State<N> y0, double t_end, const Options& opt, Observer&& observer)
{
    using namespace tableau;
    const double span = t_end - t0;
    if (!(span > 0.0)) {
        throw DomainError("ode::integrate: t_end must exceed t0");
    }
    if (!(opt.rtol > 0.0) || !(opt.atol > 0.0)) {
        throw DomainError("ode::integrate: tolerances must be positive");
    }
    const double h_min = opt.min_step * span;
    const double h_max = opt.max_step > 0.0 ? opt.max_step : span;

    auto axpy = [](const State<N>& y, double h, std::initializer_list<std::pair<double, const State<N>*>> terms) {
        State<N> out = y;
        for (std::size_t i = 0; i < N; ++i) {
            double acc = 0.0;
            for (const auto& [coef, k] : terms) {
                acc += coef * (*k)[i];
            }
            out[i] += h * acc;
        }
        return out;
    };

    double t = t0;
    State<N> y = y0;
    State<N> k1;
    try {
        k1 = rhs(t, y);
    }
    catch (const RhsFailure& e) {
        throw IntegrationError<N>(std::string("right-hand side failed at the initial state: ") + e.what(), t, y);
    }

    double h = opt.initial_step > 0.0 ? opt.initial_step : std::min(h_max, 1e-6 * span);
    double err_old = 1e-4;
    bool last_rejected = false;

    for (long n = 0; n < opt.max_steps; ++n) {
        if (t >= t_end) {
            return;
        }
        h = std::min({h, h_max, t_end - t});
        if (h < h_min && t_end - t > h_min) {
            throw IntegrationError<N>("step size underflow", t, y);
        }

        State<N> k2, k3, k4, k5, k6, k7, y_new;
        try {
            k2 = rhs(t + c2 * h, axpy(y, h, {{a21, &k1}}));
            k3 = rhs(t + c3 * h, axpy(y, h, {{a31, &k1}, {a32, &k2}}));
            k4 = rhs(t + c4 * h, axpy(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
            k5 = rhs(t + c5 * h, axpy(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
            k6 = rhs(t + h, axpy(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
            y_new = axpy(y, h, {{a71, &k1}, {a73, &k3}, {a74, &k4}, {a75, &k5}, {a76, &k6}});
            k7 = rhs(t + h, y_new);
        }
        catch (const RhsFailure&) {
            h *= 0.5;
            last_rejected = true;
            continue;
        }

        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
            err += (e / scale) * (e / scale);
        }
        err = std::sqrt(err / static_cast<double>(N));
        if (!std::isfinite(err)) {
            h *= 0.5;
            last_rejected = true;
            continue;
        }

        // PI controller (Hairer's beta = 0.04).
        const double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.17) * std::pow(err_old, 0.04);
        if (err > 1.0) {
            h *= std::max(0.2, std::min(1.0, 0.9 * std::pow(err, -0.2)));
            last_rejected = true;
            continue;
        }

        Step<N> step;
        step.t_old = t;
        step.t_new = t + h;
        step.y_old = y;
        step.y_new = y_new;
        for (std::size_t i = 0; i < N; ++i) {
            const double ydiff = y_new[i] - y[i];
            const double bspl = h * k1[i] - ydiff;
            step.rcont_[0][i] = y[i];
            step.rcont_[1][i] = ydiff;
            step.rcont_[2][i] = bspl;
            step.rcont_[3][i] = ydiff - h * k7[i] - bspl;
            step.rcont_[4][i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
        }

        const bool keep_going = observer(step);
        t = step.t_new;
        y = step.y_new;
        if (step.truncated()) {
            try {
                k1 = rhs(t, y);
            }
            catch (const RhsFailure& e) {
                throw IntegrationError<N>(std::string("right-hand side failed after event: ") + e.what(), t, y);
            }
        }
        else {
            k1 = k7;
        }
        if (!keep_going) {
            return;
        }

        err_old = std::max(err, 1e-4);
        double grow = std::min(10.0, std::max(0.2, fac));
        if (last_rejected) {
            grow = std::min(grow, 1.0);
        }
        last_rejected = false;
        h *= grow;
    }
    throw IntegrationError<N>("maximum number of steps exceeded", t, y);
}

} // namespace carbkin::ode
