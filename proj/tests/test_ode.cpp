#include <cmath>

#include <gtest/gtest.h>

#include <carbkin/ode.hpp>

using namespace carbkin;
using ode::State;

TEST(Integrate, ExponentialDecayToTolerance)
{
    ode::Options opt;
    opt.rtol = 1e-10;
    opt.atol = 1e-14;
    State<1> last{};
    double t_last = 0.0;
    int steps = 0;
    ode::integrate<1>([](double, const State<1>& y) { return State<1>{-y[0]}; }, 0.0, State<1>{1.0}, 5.0, opt,
                      [&](ode::Step<1>& s) {
                          t_last = s.t_new;
                          last = s.y_new;
                          ++steps;
                          return true;
                      });
    EXPECT_EQ(t_last, 5.0);
    EXPECT_NEAR(last[0], std::exp(-5.0), 1e-10);
    EXPECT_GT(steps, 5);
}

TEST(Integrate, HarmonicOscillatorConservesEnergy)
{
    State<2> last{};
    ode::integrate<2>([](double, const State<2>& y) { return State<2>{y[1], -y[0]}; }, 0.0, State<2>{1.0, 0.0},
                      2.0 * M_PI, ode::Options{}, [&](ode::Step<2>& s) {
                          last = s.y_new;
                          return true;
                      });
    EXPECT_NEAR(last[0], 1.0, 1e-6);
    EXPECT_NEAR(last[1], 0.0, 1e-6);
}

TEST(Integrate, DenseOutputIsAccurateInsideSteps)
{
    double worst = 0.0;
    ode::Options opt;
    opt.rtol = 1e-9;
    ode::integrate<1>([](double t, const State<1>&) { return State<1>{std::cos(t)}; }, 0.0, State<1>{0.0}, 10.0,
                      opt, [&](ode::Step<1>& s) {
                          for (int k = 0; k <= 10; ++k) {
                              const double t = s.t_old + 0.1 * k * (s.t_new - s.t_old);
                              worst = std::max(worst, std::abs(s.at(t)[0] - std::sin(t)));
                          }
                          return true;
                      });
    EXPECT_LT(worst, 1e-7);
}

TEST(Integrate, RecoversFromRhsFailure)
{
    // Rhs refuses states with y < 0; the solution approaches 0 from above.
    int failures = 0;
    State<1> last{};
    ode::integrate<1>(
        [&](double, const State<1>& y) {
            if (y[0] < 0.0) {
                ++failures;
                throw ode::RhsFailure("negative");
            }
            return State<1>{-std::sqrt(y[0])};
        },
        0.0, State<1>{1.0}, 1.9, ode::Options{}, [&](ode::Step<1>& s) {
            last = s.y_new;
            return true;
        });
    // Exact solution: sqrt(y) = 1 - t/2.
    EXPECT_NEAR(last[0], 0.05 * 0.05, 1e-6);
    EXPECT_GE(failures, 0);
}

TEST(Integrate, FailureAtInitialStateIsIntegrationError)
{
    auto rhs = [](double, const State<1>&) -> State<1> { throw ode::RhsFailure("never"); };
    EXPECT_THROW(ode::integrate<1>(rhs, 0.0, State<1>{1.0}, 1.0, ode::Options{}, [](ode::Step<1>&) { return true; }),
                 ode::IntegrationError<1>);
}

TEST(Integrate, PersistentFailureUnderflowsWithLastState)
{
    auto rhs = [](double t, const State<1>& y) {
        if (t > 0.5) {
            throw ode::RhsFailure("wall");
        }
        return State<1>{1.0 + 0 * y[0]};
    };
    try {
        ode::integrate<1>(rhs, 0.0, State<1>{0.0}, 1.0, ode::Options{}, [](ode::Step<1>&) { return true; });
        FAIL() << "expected IntegrationError";
    }
    catch (const ode::IntegrationError<1>& e) {
        EXPECT_LE(e.last_time(), 0.5);
        EXPECT_NEAR(e.last_state()[0], e.last_time(), 1e-12);
    }
}

TEST(Integrate, ObserverCanStopEarly)
{
    double t_last = 0.0;
    ode::integrate<1>([](double, const State<1>&) { return State<1>{1.0}; }, 0.0, State<1>{0.0}, 100.0,
                      ode::Options{}, [&](ode::Step<1>& s) {
                          t_last = s.t_new;
                          return s.t_new < 1.0;
                      });
    EXPECT_GE(t_last, 1.0);
    EXPECT_LT(t_last, 100.0);
}

TEST(Integrate, TruncationRestartsFromEventPoint)
{
    // y' = -1 from y = 1; clamp at y = 0 by truncating the step and then
    // switching the rhs off.
    bool floored = false;
    double t_event = -1.0;
    State<1> last{};
    ode::integrate<1>([&](double, const State<1>&) { return State<1>{floored ? 0.0 : -1.0}; }, 0.0, State<1>{1.0},
                      3.0, ode::Options{}, [&](ode::Step<1>& s) {
                          if (!floored && s.y_new[0] < 0.0) {
                              const double te = s.t_old + s.y_old[0];
                              s.truncate(te, State<1>{0.0});
                              floored = true;
                              t_event = te;
                          }
                          last = s.y_new;
                          return true;
                      });
    EXPECT_NEAR(t_event, 1.0, 1e-12);
    EXPECT_EQ(last[0], 0.0);
}

TEST(Integrate, InvalidArgumentsAreDomainErrors)
{
    auto rhs = [](double, const State<1>&) { return State<1>{0.0}; };
    auto obs = [](ode::Step<1>&) { return true; };
    EXPECT_THROW(ode::integrate<1>(rhs, 1.0, State<1>{0.0}, 1.0, ode::Options{}, obs), DomainError);
    ode::Options bad;
    bad.rtol = 0.0;
    EXPECT_THROW(ode::integrate<1>(rhs, 0.0, State<1>{0.0}, 1.0, bad, obs), DomainError);
}
