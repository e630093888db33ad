#include "s2s/errors.hpp"
#include "s2s/phantom.hpp"

#include <doctest.h>

#include <cmath>

using namespace s2s;

namespace {

PhantomGeometry empty_phantom(double w = 10.0, double h = 10.0) {
    PhantomGeometry g;
    g.width_mm = w;
    g.height_mm = h;
    g.background = {false, 1.0};
    return g;
}

InclusionSpec rect(double cx, double cz, double ex, double ez, bool interface = true) {
    InclusionSpec s;
    s.shape = InclusionShape::cuboid;
    s.center_mm = {cx, cz};
    s.extent_mm = {ex, ez};
    s.region = {false, 3.0};
    s.has_interface = interface;
    s.interface_amplitude = 14.0;
    return s;
}

} // namespace

TEST_CASE("generate_phantom honours the configured count and ranges") {
    PhantomConfig cfg;
    const PhantomGeometry g = generate_phantom(cfg, 42);
    CHECK(g.inclusions.size() == 100);
    CHECK(g.seed == 42);
    for (const auto& inc : g.inclusions) {
        CHECK(inc.center_mm.x >= 0.0);
        CHECK(inc.center_mm.x <= cfg.width_mm);
        CHECK(inc.center_mm.z >= 0.0);
        CHECK(inc.center_mm.z <= cfg.height_mm);
        CHECK(inc.extent_mm.x >= 1.0);
        CHECK(inc.extent_mm.x <= 5.0);
        CHECK(inc.extent_mm.z >= 1.0);
        CHECK(inc.extent_mm.z <= 5.0);
        CHECK(inc.region.amplitude_sigma >= 0.0);
        CHECK(inc.interface_amplitude >= 0.0);
    }
    CHECK(generate_phantom(cfg, 42) == g);
    CHECK_FALSE(generate_phantom(cfg, 43) == g);

    cfg.inclusion_count = 0;
    CHECK(generate_phantom(cfg, 1).inclusions.empty());
}

TEST_CASE("invalid phantom configs are rejected") {
    PhantomConfig cfg;
    cfg.inclusion_count = -1;
    CHECK_THROWS_AS(generate_phantom(cfg, 1), ConfigError);
    cfg = {};
    cfg.width_mm = 0.0;
    CHECK_THROWS_AS(generate_phantom(cfg, 1), ConfigError);
}

TEST_CASE("phantom parameter distributions") {
    PhantomConfig cfg;
    cfg.inclusion_count = 100;
    int inclusions = 0;
    int interfaces = 0;
    int anechoic = 0;
    int shapes = 0;
    int bg_anechoic = 0;
    int phantoms = 0;
    double sigma_sum = 0.0;
    int sigma_zero = 0;
    double extent_sum = 0.0;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto g = generate_phantom(cfg, seed);
        ++phantoms;
        bg_anechoic += g.background.anechoic ? 1 : 0;
        for (const auto& inc : g.inclusions) {
            ++inclusions;
            interfaces += inc.has_interface ? 1 : 0;
            anechoic += inc.region.anechoic ? 1 : 0;
            shapes += inc.shape == InclusionShape::cuboid ? 1 : 0;
            sigma_sum += inc.region.amplitude_sigma;
            sigma_zero += inc.region.amplitude_sigma == 0.0 ? 1 : 0;
            extent_sum += inc.extent_mm.x;
        }
    }
    REQUIRE(inclusions == 20000);
    const double n = inclusions;
    CHECK(interfaces / n >= 0.48);
    CHECK(interfaces / n <= 0.52);
    CHECK(std::abs(anechoic / n - 0.4) <= 0.02);
    CHECK(std::abs(shapes / n - 0.5) <= 0.02);
    CHECK(std::abs(extent_sum / n - 3.0) <= 0.05);
    // sigma ~ N(4, 2^2) clamped at 0: mean of max(X, 0) = 4 Phi(2) + 2 phi(2) = 4.0170, P(X <= 0) = 0.0228.
    const double clamped_mean = 4.0 * 0.5 * std::erfc(-2.0 / std::sqrt(2.0)) + 2.0 * std::exp(-2.0) / std::sqrt(2.0 * M_PI);
    CHECK(sigma_sum / n == doctest::Approx(clamped_mean).epsilon(0.025));
    CHECK(std::abs(sigma_zero / n - 0.02275) <= 0.005);

    int bg = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        PhantomConfig c0 = cfg;
        c0.inclusion_count = 0;
        bg += generate_phantom(c0, seed).background.anechoic ? 1 : 0;
    }
    CHECK(std::abs(bg / 10000.0 - 0.4) <= 0.02);
    (void)bg_anechoic;
    (void)phantoms;
}

TEST_CASE("region lookup is last-listed-wins") {
    PhantomGeometry g = empty_phantom();
    CHECK(region_index_at(g, {5.0, 5.0}) == -1);
    CHECK(region_at(g, {5.0, 5.0}) == g.background);
    g.inclusions.push_back(rect(5.0, 5.0, 4.0, 4.0));
    g.inclusions.push_back(rect(6.0, 6.0, 2.0, 2.0));
    g.inclusions[1].region.amplitude_sigma = 7.0;
    CHECK(region_index_at(g, {3.5, 3.5}) == 0);
    CHECK(region_index_at(g, {6.0, 6.0}) == 1);
    CHECK(region_at(g, {6.0, 6.0}).amplitude_sigma == 7.0);
    CHECK(region_index_at(g, {9.0, 1.0}) == -1);
    CHECK_THROWS_AS(region_at(g, {11.0, 5.0}), DomainError);
    CHECK_THROWS_AS(region_at(g, {5.0, -0.1}), DomainError);
}

TEST_CASE("ellipse containment and boundary distance") {
    InclusionSpec e;
    e.shape = InclusionShape::spheroid;
    e.center_mm = {5.0, 5.0};
    e.extent_mm = {4.0, 2.0};
    CHECK(e.contains({6.9, 5.0}));
    CHECK_FALSE(e.contains({7.1, 5.0}));
    CHECK(e.boundary_distance({5.0, 5.0}) == doctest::Approx(1.0));
    CHECK(e.boundary_distance({8.0, 5.0}) == doctest::Approx(1.0));
    CHECK(e.boundary_distance({5.0, 7.0}) == doctest::Approx(1.0));
    // Ramanujan's approximation for a = 2, b = 1.
    const double a = 2.0;
    const double b = 1.0;
    const double hh = (a - b) * (a - b) / ((a + b) * (a + b));
    const double ramanujan = M_PI * (a + b) * (1 + 3 * hh / (10 + std::sqrt(4 - 3 * hh)));
    CHECK(e.perimeter_mm() == doctest::Approx(ramanujan).epsilon(1e-4));
    CHECK(rect(0, 0, 3.0, 2.0).perimeter_mm() == doctest::Approx(10.0));
}

TEST_CASE("rasterize_interfaces draws a closed one-pixel ring for a rectangle") {
    // 1 mm pixels; edges at x = 2.5 and 8.5, z = 3.5 and 7.5 pass through pixel centers.
    PhantomGeometry g = empty_phantom();
    g.inclusions.push_back(rect(5.5, 5.5, 6.0, 4.0));
    const GridSpec grid{10, 10, 1.0, 1.0};
    const InterfaceMap m = rasterize_interfaces(g, grid);
    int ones = 0;
    for (int z = 0; z < 10; ++z) {
        for (int x = 0; x < 10; ++x) {
            const double v = m.grid.at(x, z);
            CHECK((v == 0.0 || v == 1.0));
            const bool on_ring = ((x == 2 || x == 8) && z >= 3 && z <= 7) || ((z == 3 || z == 7) && x >= 2 && x <= 8);
            CHECK_MESSAGE(v == (on_ring ? 1.0 : 0.0), "pixel ", x, ",", z);
            ones += v == 1.0 ? 1 : 0;
        }
    }
    // 7 x 5 pixel outline: 2 (w + h) - 4 ring pixels.
    CHECK(std::abs(ones - 2 * (7 + 5)) <= 4);
}

TEST_CASE("interfaces are drawn only for flagged inclusions") {
    PhantomGeometry g = empty_phantom();
    g.inclusions.push_back(rect(5.0, 5.0, 4.0, 4.0, false));
    const GridSpec grid{20, 20, 0.5, 0.5};
    auto m = rasterize_interfaces(g, grid);
    CHECK(m.grid.max() == 0.0);
    g.inclusions[0].has_interface = true;
    m = rasterize_interfaces(g, grid);
    CHECK(m.grid.max() == 1.0);
}

TEST_CASE("phantom JSON round trip") {
    const PhantomGeometry g = generate_phantom(PhantomConfig{}, 7);
    const nlohmann::json j = g;
    CHECK(j.at("inclusions").size() == 100);
    const auto back = nlohmann::json::parse(j.dump()).get<PhantomGeometry>();
    CHECK(back == g);
}
