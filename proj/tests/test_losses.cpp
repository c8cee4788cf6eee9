#include "helpers.hpp"

#include "isgd/error.hpp"
#include "isgd/losses.hpp"
#include "isgd/rng.hpp"
#include "isgd/validation.hpp"

#include <doctest.h>

#include <cmath>

using namespace isgd;
using test::mat;

namespace {

constexpr LossKind kAll[] = {LossKind::softmax_cross_entropy, LossKind::sigmoid_binary_nll, LossKind::squared_error};

Matrix random_z(std::size_t rows, std::size_t cols, Rng& rng, double scale = 2.0) {
    Matrix z(rows, cols);
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = scale * rng.normal();
    return z;
}

}  // namespace

TEST_CASE("loss values on hand-checked inputs") {
    CHECK(loss_values(LossKind::softmax_cross_entropy, mat({{0, 0}}), Targets::classes({0}))(0) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const Matrix y = mat({{0.3, -1.2, 4.0}});
    CHECK(loss_values(LossKind::squared_error, y, Targets::values(y))(0) == 0.0);
    CHECK(loss_values(LossKind::sigmoid_binary_nll, mat({{2.0}}), Targets::values(mat({{1.0}})))(0) ==
          doctest::Approx(0.126928).epsilon(1e-6));
    CHECK(loss_values(LossKind::squared_error, mat({{1.0, 2.0}}), Targets::values(mat({{0.0, 0.0}})))(0) == 5.0);
}

TEST_CASE("softmax cross-entropy stays finite for huge logits") {
    const Vector l = loss_values(LossKind::softmax_cross_entropy, mat({{1000, -1000, 0}}), Targets::classes({1}));
    CHECK(std::isfinite(l(0)));
    CHECK(l(0) == doctest::Approx(2000.0));
}

TEST_CASE("pre-activation gradients on hand-checked inputs") {
    const Matrix g = preactivation_gradients(LossKind::softmax_cross_entropy, mat({{0, 0}}), Targets::classes({0}));
    CHECK(g(0, 0) == -0.5);
    CHECK(g(0, 1) == 0.5);
    const Matrix y = mat({{0.3, -1.2}});
    CHECK(preactivation_gradients(LossKind::squared_error, y, Targets::values(y)).norm() == 0.0);
}

TEST_CASE("pre-activation gradients match finite differences of the loss") {
    Rng rng(17);
    for (LossKind kind : kAll) {
        const Matrix z = random_z(6, 4, rng);
        const Targets t = random_targets(kind, 6, 4, rng);
        const Matrix g = preactivation_gradients(kind, z, t);
        CHECK(output_gradients(kind, z, t) == g);
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            for (Eigen::Index k = 0; k < z.cols(); ++k) {
                Matrix up = z, down = z;
                up(i, k) += h;
                down(i, k) -= h;
                const double numeric =
                    (loss_values(kind, up, t)(i) - loss_values(kind, down, t)(i)) / (2.0 * h);
                CHECK(std::abs(numeric - g(i, k)) <= 1e-6);
            }
        }
    }
}

TEST_CASE("gradient rows are bounded and vanish with the loss") {
    Rng rng(5);
    const Matrix z = random_z(50, 5, rng, 6.0);
    const auto t = random_targets(LossKind::softmax_cross_entropy, 50, 5, rng);
    const Matrix g = preactivation_gradients(LossKind::softmax_cross_entropy, z, t);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        CHECK(std::abs(g.row(i).sum()) <= 1e-15);
        CHECK(g.row(i).norm() <= std::sqrt(2.0));
    }
    const auto ts = random_targets(LossKind::sigmoid_binary_nll, 50, 5, rng);
    CHECK(preactivation_gradients(LossKind::sigmoid_binary_nll, z, ts).cwiseAbs().maxCoeff() <= 1.0);

    // Confidently correct predictions.
    const Matrix sure = mat({{40, 0, 0}, {0, 0, 40}});
    const auto ts2 = Targets::classes({0, 2});
    const Vector l = loss_values(LossKind::softmax_cross_entropy, sure, ts2);
    const Matrix gs = preactivation_gradients(LossKind::softmax_cross_entropy, sure, ts2);
    for (Eigen::Index i = 0; i < 2; ++i) {
        CHECK(l(i) < 1e-6);
        CHECK(gs.row(i).norm() < 1e-3);
    }
    const Matrix zb = mat({{30.0, -30.0}});
    const auto tb = Targets::values(mat({{1.0, -1.0}}));
    CHECK(loss_values(LossKind::sigmoid_binary_nll, zb, tb)(0) < 1e-6);
    CHECK(preactivation_gradients(LossKind::sigmoid_binary_nll, zb, tb).norm() < 1e-3);
}

TEST_CASE("loss argument checking") {
    CHECK_THROWS_AS(loss_values(LossKind::softmax_cross_entropy, mat({{0, 0}}), Targets::classes({2})), ArgumentError);
    CHECK_THROWS_AS(loss_values(LossKind::sigmoid_binary_nll, mat({{0.0}}), Targets::values(mat({{0.5}}))),
                    ArgumentError);
    CHECK_THROWS_AS(loss_values(LossKind::squared_error, mat({{0, 0}}), Targets::values(mat({{0, 0, 0}}))), ShapeError);
    CHECK_THROWS_AS(loss_values(LossKind::squared_error, mat({{0, 0}}), Targets::classes({0})), ArgumentError);
    CHECK(parse_loss("sigmoid-binary-nll") == LossKind::sigmoid_binary_nll);
    CHECK_THROWS_AS(parse_loss("hinge"), ArgumentError);
}
