#include <doctest.h>

#include "camdp/simplex.hpp"

using namespace camdp;

namespace {

LinearProgram<double> lp_of(const MatrixXd& A, const VectorXd& b, std::vector<RowSense> s, const VectorXd& c) {
    return {A, b, std::move(s), c};
}

} // namespace

TEST_CASE("textbook LP: max 3x + 5y has optimum 36 at (2, 6)") {
    MatrixXd A(3, 2);
    A << 1, 0, 0, 2, 3, 2;
    VectorXd b(3), c(2);
    b << 4, 12, 18;
    c << 3, 5;
    const auto r = solve_lp(lp_of(A, b, {RowSense::le, RowSense::le, RowSense::le}, c));
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(36));
    CHECK(r.x(0) == doctest::Approx(2));
    CHECK(r.x(1) == doctest::Approx(6));
    CHECK(r.duals(0) == doctest::Approx(0).epsilon(1e-12));
    CHECK(r.duals(1) == doctest::Approx(1.5));
    CHECK(r.duals(2) == doctest::Approx(1));
    CHECK(r.dual_objective == doctest::Approx(36));
}

TEST_CASE("infeasible and unbounded programs are reported") {
    MatrixXd A(2, 1);
    A << 1, 1;
    VectorXd b(2), c(1);
    b << 2, 1;
    c << 1;
    CHECK(solve_lp(lp_of(A, b, {RowSense::ge, RowSense::le}, c)).status == LpStatus::infeasible);

    MatrixXd A2(1, 2);
    A2 << 1, -1;
    VectorXd b2(1), c2(2);
    b2 << 1;
    c2 << 1, 0;
    CHECK(solve_lp(lp_of(A2, b2, {RowSense::le}, c2)).status == LpStatus::unbounded);
}

TEST_CASE("equality rows and negative right-hand sides") {
    // max x + 2y s.t. x + y = 1, -y >= -0.25
    MatrixXd A(2, 2);
    A << 1, 1, 0, -1;
    VectorXd b(2), c(2);
    b << 1, -0.25;
    c << 1, 2;
    const auto r = solve_lp(lp_of(A, b, {RowSense::eq, RowSense::ge}, c));
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(1.25));
    CHECK(r.x(1) == doctest::Approx(0.25));
}

TEST_CASE("Beale's cycling example terminates under Bland's rule") {
    MatrixXd A(3, 4);
    A << 0.25, -60, -0.04, 9,  //
        0.5, -90, -0.02, 3,    //
        0, 0, 1, 0;
    VectorXd b(3), c(4);
    b << 0, 0, 1;
    c << 0.75, -150, 0.02, -6;
    const auto r = solve_lp(lp_of(A, b, {RowSense::le, RowSense::le, RowSense::le}, c));
    REQUIRE(r.status == LpStatus::optimal);
    CHECK(r.objective == doctest::Approx(0.05));
    CHECK(r.x(0) == doctest::Approx(0.04));
    CHECK(r.x(2) == doctest::Approx(1.0));
}
