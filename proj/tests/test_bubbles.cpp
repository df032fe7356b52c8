#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "liouville/bubbles.hpp"

using namespace liouville;

namespace {

constexpr double kPi = std::numbers::pi;

ProblemData plain_cylinder(double lambda, int refinement = 3) {
    return make_problem(generate(Shape::Cylinder, refinement), Field::Constant(1, 1.0), {}, lambda);
}

}  // namespace

TEST_CASE("bubble field peaks at its atom") {
    ProblemData data = plain_cylinder(6 * kPi);
    MeshPoint q = MeshPoint::vertex(data.mesh().boundary_loops[0][5]);
    BarycenterConfig sigma = uniform_barycenter({q});
    Field phi = bubble_field(data, sigma, 50.0);
    int argmax = 0;
    phi.maxCoeff(&argmax);
    CHECK(argmax == q.a);
}

TEST_CASE("bubble field at Lambda = 1 is the bounded profile") {
    ProblemData data = plain_cylinder(6 * kPi);
    MeshPoint q = MeshPoint::vertex(data.mesh().boundary_loops[0][0]);
    Field phi = bubble_field(data, uniform_barycenter({q}), 1.0);
    // log(1/(1+d^2)^2) + const: total range bounded by 2 log(1 + diam^2)
    double diam_sq = kPi * kPi + 1;
    CHECK(phi.maxCoeff() - phi.minCoeff() <= 2 * std::log1p(diam_sq) + 1e-9);
}

TEST_CASE("bubble field is invariant under atom permutation and weight rescaling") {
    ProblemData data = plain_cylinder(6 * kPi);
    auto pts = boundary_positions(data.mesh(), 1, 2);
    BarycenterConfig a;
    a.order = 2;
    a.atoms = {{0.3, pts[0]}, {0.7, pts[1]}};
    BarycenterConfig b;
    b.order = 2;
    b.atoms = {{0.7 * 5, pts[1]}, {0.3 * 5, pts[0]}};  // permuted and scaled by 5
    Field va = bubble_field(data, a, 40.0);
    Field vb = bubble_field(data, b.normalized(), 40.0);
    CHECK((va - vb).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("symmetric two-atom bubble is symmetric under the deck swap") {
    ProblemData data = plain_cylinder(6 * kPi);
    const SurfaceMesh& mesh = data.mesh();
    // atoms at u = 0 and u = pi on the bottom circle; field must match at
    // mirror vertices u and u + pi
    int q0 = nearest_vertex(mesh, {1.0, 0.0, 0.0});
    int q1 = nearest_vertex(mesh, {-1.0, 0.0, 0.0});
    BarycenterConfig sigma;
    sigma.order = 2;
    sigma.atoms = {{0.5, MeshPoint::vertex(q0)}, {0.5, MeshPoint::vertex(q1)}};
    Field phi = bubble_field(data, sigma, 30.0);
    int a = nearest_vertex(mesh, {std::cos(0.5), std::sin(0.5), 0.25});
    int b = nearest_vertex(mesh, {std::cos(0.5 + kPi), std::sin(0.5 + kPi), 0.25});
    CHECK(phi[a] == doctest::Approx(phi[b]).epsilon(1e-9));
}

TEST_CASE("patch quadrature reproduces the closed-form half-plane energy for k = 1") {
    // For one boundary atom the Dirichlet energy over a half-disk of radius R is
    //   1/2 * pi * 8 [ln(1 + L^2 R^2) + 1/(1 + L^2 R^2) - 1]
    ProblemData data = plain_cylinder(6 * kPi);
    auto pts = boundary_positions(data.mesh(), 1, 1);
    double L = 1e3;
    BubbleSlopes rep = bubble_energy_report(data, uniform_barycenter({pts[0]}), {1e2, L, 1e4});
    // total = patch + remainder; the remainder is Lambda-independent, so check
    // the increment between two Lambdas against the closed form
    auto closed = [&](double Lam) {
        return 0.5 * kPi * 8.0 *
               (std::log1p(Lam * Lam) + 1.0 / (1.0 + Lam * Lam) - 1.0);  // R = 1 reference
    };
    double inc_num = rep.dirichlet[2] - rep.dirichlet[1];
    double inc_exact = closed(1e4) - closed(L);
    CHECK(inc_num == doctest::Approx(inc_exact).epsilon(0.02));
}

TEST_CASE("bubble energy slopes match the expected asymptotics") {
    SUBCASE("one boundary atom") {
        ProblemData data = plain_cylinder(6 * kPi);
        auto pts = boundary_positions(data.mesh(), 1, 1);
        BubbleSlopes rep =
            bubble_energy_report(data, uniform_barycenter({pts[0]}), {1e2, 1e3, 1e4});
        CHECK(rep.analytic);
        CHECK(rep.dirichlet_slope >= 0.85 * 8 * kPi);
        CHECK(rep.dirichlet_slope <= 1.15 * 8 * kPi);
        CHECK(rep.mass_slope >= 0.85 * 2.0);
        CHECK(rep.mass_slope <= 1.15 * 2.0);
        // J slope is 8 pi - 2 lambda = -4 pi < 0
        CHECK(rep.J_slope <= 0.85 * (8 * kPi - 12 * kPi));
        CHECK(rep.J_slope >= 1.15 * (8 * kPi - 12 * kPi));
    }

    SUBCASE("two boundary atoms") {
        ProblemData data = plain_cylinder(10 * kPi);
        auto pts = boundary_positions(data.mesh(), 1, 2);
        BubbleSlopes rep = bubble_energy_report(data, uniform_barycenter(pts), {1e2, 1e3, 1e4});
        CHECK(rep.dirichlet_slope >= 0.85 * 16 * kPi);
        CHECK(rep.dirichlet_slope <= 1.15 * 16 * kPi);
        CHECK(rep.mass_slope >= 0.85 * 2.0);
        CHECK(rep.mass_slope <= 1.15 * 2.0);
        CHECK(rep.J_slope <= 0.85 * (16 * kPi - 20 * kPi));
        CHECK(rep.J_slope >= 1.15 * (16 * kPi - 20 * kPi));
    }
}

TEST_CASE("cones near atoms are rejected by the protected radius") {
    SurfaceMesh mesh = generate(Shape::Cylinder, 2);
    auto loop0 = mesh.boundary_loops[0];
    // cone one ring above the bottom boundary, right next to the first atom
    int p = -1;
    for (int v = 0; v < mesh.vertex_count(); ++v)
        if (!mesh.on_boundary[v] && (mesh.vertices[v] - mesh.vertices[loop0[0]]).norm() < 0.6) {
            p = v;
            break;
        }
    REQUIRE(p >= 0);
    ProblemData data = make_problem(std::move(mesh), Field::Constant(1, 1.0), {{p, 0.7}}, 6 * kPi);
    auto pts = boundary_positions(data.mesh(), 1, 1);
    CHECK_THROWS_AS(bubble_energy_report(data, uniform_barycenter({pts[0]}), {1e2, 1e3, 1e4}),
                    PreconditionError);
}

TEST_CASE("barycenter projection") {
    ProblemData data = plain_cylinder(6 * kPi, 2);
    const SurfaceMesh& mesh = data.mesh();
    const auto& ops = data.ops();
    const int n = mesh.vertex_count();

    SUBCASE("all mass at one vertex") {
        int q = nearest_vertex(mesh, {1.0, 0.0, 0.5});
        Field rho = Field::Zero(n);
        rho[q] = 1.0 / ops.mass[q];
        double eps = -1;
        BarycenterConfig sigma = barycenter_project(data, rho, 1, 0.3, &eps);
        REQUIRE(sigma.atoms.size() == 1);
        CHECK(sigma.atoms[0].point.a == q);
        CHECK(sigma.atoms[0].weight == doctest::Approx(1.0));
        CHECK(eps == doctest::Approx(0.0).epsilon(1e-12));
    }

    SUBCASE("two separated spikes recover their weights") {
        int q1 = nearest_vertex(mesh, {1.0, 0.0, 0.5});
        int q2 = nearest_vertex(mesh, {-1.0, 0.0, 0.5});
        Field rho = Field::Zero(n);
        rho[q1] = 0.6 / ops.mass[q1];
        rho[q2] = 0.4 / ops.mass[q2];
        BarycenterConfig sigma = barycenter_project(data, rho, 2, 0.4);
        REQUIRE(sigma.atoms.size() == 2);
        CHECK(sigma.atoms[0].point.a == q1);
        CHECK(sigma.atoms[1].point.a == q2);
        CHECK(sigma.atoms[0].weight == doctest::Approx(0.6).epsilon(1e-6));
        CHECK(sigma.atoms[1].weight == doctest::Approx(0.4).epsilon(1e-6));
    }

    SUBCASE("uniform density stays uncaptured at small radius") {
        Field rho = Field::Constant(n, 1.0 / ops.area);
        double eps = -1;
        barycenter_project(data, rho, 1, 0.1, &eps);
        CHECK(eps > 0.9);
    }

    SUBCASE("adding atoms never decreases captured mass") {
        Field rho = Field::Constant(n, 1.0 / ops.area);
        double eps1, eps2, eps3;
        barycenter_project(data, rho, 1, 0.5, &eps1);
        barycenter_project(data, rho, 2, 0.5, &eps2);
        barycenter_project(data, rho, 3, 0.5, &eps3);
        CHECK(eps2 <= eps1 + 1e-12);
        CHECK(eps3 <= eps2 + 1e-12);
    }

    SUBCASE("non-normalized density is rejected") {
        Field rho = Field::Constant(n, 2.0 / ops.area);
        CHECK_THROWS_AS(barycenter_project(data, rho, 1, 0.3), PreconditionError);
    }
}

TEST_CASE("boundary pushforward") {
    SurfaceMesh mesh = generate(Shape::Cylinder, 2);

    SUBCASE("atom already on the loop is unchanged") {
        MeshPoint q = MeshPoint::vertex(mesh.boundary_loops[0][4]);
        BarycenterConfig sigma = uniform_barycenter({q});
        BarycenterConfig out = boundary_pushforward(mesh, sigma, 1);
        CHECK(out.atoms[0].point == q);
    }

    SUBCASE("weights are preserved and the map is idempotent") {
        int a = nearest_vertex(mesh, {1.0, 0.0, 0.7});
        int b = nearest_vertex(mesh, {0.0, 1.0, 0.3});
        BarycenterConfig sigma;
        sigma.order = 2;
        sigma.atoms = {{0.25, MeshPoint::vertex(a)}, {0.75, MeshPoint::vertex(b)}};
        BarycenterConfig once = boundary_pushforward(mesh, sigma, 1);
        BarycenterConfig twice = boundary_pushforward(mesh, once, 1);
        CHECK(once.atoms[0].weight == 0.25);
        CHECK(once.atoms[1].weight == 0.75);
        double sum = once.atoms[0].weight + once.atoms[1].weight;
        CHECK(sum == 1.0);
        for (int i = 0; i < 2; ++i) {
            CHECK(once.atoms[i].point == twice.atoms[i].point);
            CHECK(mesh.on_boundary[once.atoms[i].point.a]);
        }
    }

    SUBCASE("graph-distance backend on the pair of pants") {
        SurfaceMesh pants = generate(Shape::PairOfPants, 2);
        int a = nearest_vertex(pants, {3.5, 1.5, 0.0});
        BarycenterConfig out =
            boundary_pushforward(pants, uniform_barycenter({MeshPoint::vertex(a)}), 1);
        const auto& loop1 = pants.boundary_loops[0];
        CHECK(std::count(loop1.begin(), loop1.end(), out.atoms[0].point.a) == 1);
        BarycenterConfig again = boundary_pushforward(pants, out, 1);
        CHECK(again.atoms[0].point == out.atoms[0].point);
    }

    SUBCASE("targets the requested component") {
        int a = nearest_vertex(mesh, {1.0, 0.0, 0.9});
        BarycenterConfig out =
            boundary_pushforward(mesh, uniform_barycenter({MeshPoint::vertex(a)}), 2);
        const auto& loop2 = mesh.boundary_loops[1];
        CHECK(std::count(loop2.begin(), loop2.end(), out.atoms[0].point.a) == 1);
    }
}

TEST_CASE("mass spectrum") {
    ProblemData data = plain_cylinder(3.8 * kPi, 2);

    SUBCASE("diffuse field has no peaks") {
        MassReport rep = mass_spectrum(data, Field::Zero(data.mesh().vertex_count()), 0.4);
        CHECK(rep.peaks.empty());
    }

    SUBCASE("boundary spike reports a mass near its quantum") {
        auto pts = boundary_positions(data.mesh(), 1, 1);
        Field phi = bubble_field(data, uniform_barycenter({pts[0]}), 60.0);
        MassReport rep = mass_spectrum(data, phi, 0.8);
        REQUIRE(rep.peaks.size() >= 1);
        CHECK(rep.peaks[0].on_boundary);
        CHECK(rep.peaks[0].reference_class == "boundary");
        CHECK(rep.captured <= data.lambda * (1 + 1e-9));
    }
}

TEST_CASE("moser-trudinger probe") {
    MtProbeConfig cfg;
    cfg.shape = Shape::Cylinder;
    cfg.region_center = {1.0, 0.0, 0.0};  // touches the bottom boundary circle
    cfg.region_radius = 0.45;
    cfg.collar = 0.25;
    cfg.levels = {3, 4, 5};
    cfg.epsilon = 0.05;
    cfg.starts = 3;
    cfg.iterations = 250;
    cfg.seed = 7;

    SUBCASE("boundary region below the constant stays bounded") {
        cfg.constant = 0.9 * 4 * kPi;
        MtProbeReport rep = mt_probe(cfg);
        CHECK_FALSE(rep.divergent);
    }

    SUBCASE("boundary region above the constant diverges") {
        cfg.constant = 1.5 * 4 * kPi;
        MtProbeReport rep = mt_probe(cfg);
        CHECK(rep.divergent);
    }

    SUBCASE("interior region below twice the constant stays bounded") {
        // the disk hosts a large interior region with a clean collar; the
        // plateau only shows once scales beyond 1/region are resolvable
        cfg.shape = Shape::Disk;
        cfg.region_center = {0.0, 0.0, 0.0};
        cfg.region_radius = 0.45;
        cfg.collar = 0.2;
        cfg.constant = 0.9 * 8 * kPi;
        cfg.levels = {3, 4, 5};
        cfg.starts = 2;
        cfg.iterations = 150;
        MtProbeReport rep = mt_probe(cfg);
        CHECK_FALSE(rep.divergent);
    }
}
