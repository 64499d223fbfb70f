#include "support.hpp"

#include "arzetc/errors.hpp"
#include "arzetc/units.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace arzetc;

namespace
{

ModelParams section5_base()
{
  ModelParams p;
  p.hv = {30.0, 2.5, 5.0, 1.0, 0.9};
  p.av = {60.0, 2.0, 16.0, 1.0, 0.85};
  p.road = {1000.0, 6.0, 1.2, 5.0};
  return p;
}

const double kRhoH = units::per_km_to_per_m(150.0);
const double kRhoA = units::per_km_to_per_m(75.0);

}  // namespace

TEST_CASE("calibration reproduces the reference equilibrium speeds")
{
  const ModelParams base = section5_base();
  const FreeFlowSpeeds ff = calibrate_free_params(kRhoH, kRhoA, units::kmh_to_mps(29.16),
                                                  units::kmh_to_mps(13.32), base, 1.2);
  CHECK(ff.area_occupancy == doctest::Approx(0.615).epsilon(1e-12));
  CHECK(units::mps_to_kmh(ff.V_h) == doctest::Approx(47.5).epsilon(2e-3));
  CHECK(units::mps_to_kmh(ff.V_a) == doctest::Approx(27.9).epsilon(2e-3));

  // Brute-force check: evaluate the fundamental diagram at the returned speeds.
  ModelParams p = base;
  p.hv.V_max = ff.V_h;
  p.av.V_max = ff.V_a;
  const auto vh = equilibrium_speed(VehicleClass::human, kRhoH, kRhoA, p);
  const auto va = equilibrium_speed(VehicleClass::autonomous, kRhoH, kRhoA, p);
  CHECK_FALSE(vh.saturated);
  CHECK(std::abs(units::mps_to_kmh(vh.speed) - 29.16) < 1e-9);
  CHECK(std::abs(units::mps_to_kmh(va.speed) - 13.32) < 1e-9);
}

TEST_CASE("calibration rejects an occupancy at or above the jam value")
{
  CHECK_THROWS_AS(calibrate_free_params(kRhoH, kRhoA, 8.0, 4.0, section5_base(), 2.0),
                  CalibrationError);
}

TEST_CASE("area occupancy")
{
  const ModelParams p = section5_base();
  CHECK(area_occupancy(0.0, 0.0, p) == 0.0);
  CHECK(area_occupancy(kRhoH, kRhoA, p) ==
        doctest::Approx((1.2 * 10.0 * kRhoH + 1.2 * 21.0 * kRhoA) / 6.0));
  CHECK_THROWS_AS(area_occupancy(-1e-3, kRhoA, p), DomainError);
}

TEST_CASE("equilibrium speed saturates beyond the jam occupancy")
{
  ModelParams p = section5_base();
  p.hv.V_max = 13.0;
  p.av.V_max = 7.0;
  const auto jam = equilibrium_speed(VehicleClass::autonomous, 0.3, 0.2, p);
  CHECK(jam.saturated);
  CHECK(jam.speed == 0.0);
  const auto free = equilibrium_speed(VehicleClass::human, 0.0, 0.0, p);
  CHECK_FALSE(free.saturated);
  CHECK(free.speed == doctest::Approx(13.0));
}

TEST_CASE("equilibrium speed gradient matches central differences")
{
  const RunPlan plan = test::paper_plan();
  const double h = 1e-7;
  for (auto cls : {VehicleClass::human, VehicleClass::autonomous}) {
    const Eigen::Vector2d g = equilibrium_speed_gradient(cls, kRhoH, kRhoA, plan.model);
    const auto v = [&](double rh, double ra) {
      return equilibrium_speed(cls, rh, ra, plan.model).speed;
    };
    const double dh = (v(kRhoH + h, kRhoA) - v(kRhoH - h, kRhoA)) / (2 * h);
    const double da = (v(kRhoH, kRhoA + h) - v(kRhoH, kRhoA - h)) / (2 * h);
    CHECK(g(0) == doctest::Approx(dh).epsilon(1e-6));
    CHECK(g(1) == doctest::Approx(da).epsilon(1e-6));
  }
}

TEST_CASE("linearization diagonalizes the characteristic matrix")
{
  const LinearizedSystem sys = test::paper_system();
  const Eigen::Matrix4d d = sys.eigvecs_inv * sys.jacobian * sys.eigvecs;
  CHECK((d - Eigen::Matrix4d(sys.lambda.asDiagonal())).norm() < 1e-10 * sys.lambda.norm());

  Eigen::EigenSolver<Eigen::Matrix4d> es(sys.jacobian);
  Eigen::Vector4d reference = es.eigenvalues().real();
  std::sort(reference.data(), reference.data() + 4);
  Eigen::Vector4d ours = sys.lambda;
  std::sort(ours.data(), ours.data() + 4);
  CHECK((reference - ours).cwiseAbs().maxCoeff() < 1e-10);

  for (int j = 0; j < 4; ++j) {
    CHECK(sys.eigvecs.col(j).norm() == doctest::Approx(1.0).epsilon(1e-14));
    int first = 0;
    while (std::abs(sys.eigvecs(first, j)) < 1e-14) {
      ++first;
    }
    CHECK(sys.eigvecs(first, j) > 0.0);
  }
}

TEST_CASE("reference eigenstructure is congested with ordered speeds")
{
  const LinearizedSystem sys = test::paper_system();
  CHECK(sys.lambda(0) == doctest::Approx(3.7).epsilon(1e-9));
  CHECK(sys.lambda(2) == doctest::Approx(8.1).epsilon(1e-9));
  CHECK(sys.lambda(1) == doctest::Approx(5.933).epsilon(1e-3));
  CHECK(sys.lambda(3) == doctest::Approx(-4.506).epsilon(1e-3));
  CHECK(sys.lambda(0) < sys.lambda(1));
  CHECK(sys.lambda(1) < sys.lambda(2));
  CHECK(sys.lambda(3) < 0.0);
}

TEST_CASE("free-flow equilibrium is rejected as not congested")
{
  const RunPlan plan = test::paper_plan();
  const Equilibrium eq = make_equilibrium(plan.model, 0.005, 0.002);
  CHECK_THROWS_AS(linearize(plan.model, eq), RegimeError);
}

TEST_CASE("boundary maps encode the physical boundary conditions")
{
  const LinearizedSystem sys = test::paper_system();
  // Inlet: z(0) = V w(0) with w+(0) = Q w-(0) satisfies C z(0) = 0.
  Eigen::Vector4d w0;
  w0 << sys.Q, 1.0;
  CHECK((sys.inlet_constraints * sys.eigvecs * w0).norm() < 1e-12);

  // Outlet: the flow perturbation of w-(L) = R w+(L) + u is the physical control.
  const Eigen::Vector3d wp(0.3, -1.2, 0.7);
  const double u = 0.25;
  Eigen::Vector4d wl;
  wl << wp, sys.R * wp + u;
  const double flow = sys.outlet_flow * sys.transform_inverse(sys.length) * wl;
  CHECK(flow == doctest::Approx(physical_control(u, sys)).epsilon(1e-10));
  CHECK(normalized_control(physical_control(u, sys), sys) == doctest::Approx(u));
}

TEST_CASE("coupling matrix has zero diagonal and matches the source at x = 0")
{
  const LinearizedSystem sys = test::paper_system();
  const Eigen::Matrix4d s0 = sys.sigma(0.0);
  for (int i = 0; i < 4; ++i) {
    CHECK(s0(i, i) == 0.0);
    for (int j = 0; j < 4; ++j) {
      if (i != j) {
        CHECK(s0(i, j) == doctest::Approx(sys.source_hat(i, j)));
      }
    }
  }
  const double x = 400.0;
  CHECK((sys.sigma_pp(x) - sys.sigma(x).topLeftCorner<3, 3>()).norm() == 0.0);
  CHECK((sys.sigma_pm(x) - sys.sigma(x).topRightCorner<3, 1>()).norm() == 0.0);
  CHECK((sys.sigma_mp(x) - sys.sigma(x).bottomLeftCorner<1, 3>()).norm() == 0.0);
}

TEST_CASE("Riemann transform round trip")
{
  const LinearizedSystem sys = test::paper_system();
  const Eigen::VectorXd x = uniform_grid(sys.length, 50);
  std::mt19937_64 rng(7);
  const RiemannField z = test::random_field(50, rng);
  const RiemannField back = riemann_inverse(riemann_forward(z, x, sys), x, sys);
  CHECK((back - z).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((sys.transform(300.0) * sys.transform_inverse(300.0) - Eigen::Matrix4d::Identity())
          .norm() < 1e-12);
  CHECK_THROWS_AS(riemann_forward(z, uniform_grid(sys.length, 49), sys), NumericalError);
}

TEST_CASE("eigenvector scaling rescales kappa and the transform together")
{
  const LinearizedSystem sys = test::paper_system();
  const Eigen::Vector4d scale(2.0, -0.5, 3.0, 0.25);
  const LinearizedSystem scaled = with_eigenvector_scaling(sys, scale);
  CHECK(scaled.kappa == doctest::Approx(sys.kappa * scale(3)));
  CHECK((scaled.lambda - sys.lambda).norm() == 0.0);
  // The same physical state maps to w scaled by 1/scale.
  const Eigen::Matrix4d ratio = scaled.transform(500.0) * sys.transform_inverse(500.0);
  CHECK((ratio - Eigen::Matrix4d(scale.cwiseInverse().asDiagonal())).norm() < 1e-12);
}

TEST_CASE("parameter validation")
{
  ModelParams p = section5_base();
  CHECK_NOTHROW(p.validate());
  p.hv.tau = -1.0;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("hv.tau"), DomainError);
  p = section5_base();
  p.road.veh_width_d = 7.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  CHECK_THROWS_AS(uniform_grid(1.0, 0), DomainError);
}
