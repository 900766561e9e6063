#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "covwalk/fuchsian.hpp"

namespace covwalk::fuchsian {

namespace {

constexpr double kPi = std::numbers::pi;

GroupElement point_normalizer(const BoundaryPoint& p) {
    if (p.infinite) return hyp2::identity();
    return GroupElement::normalized(p.x, -1.0, 1.0, 0.0);
}

/// g^-1 P g for a parabolic P fixing g(infinity); returns the unipotent
/// parameter, or NaN when the conjugate is not upper unipotent.
double unipotent_parameter(const GroupElement& g, const GroupElement& p, double tol) {
    const GroupElement m = hyp2::compose(hyp2::compose(hyp2::inverse(g), p), g);
    // c may be a rounding residue of either sign, so compare modulo -I.
    const double s = m.a() < 0.0 ? -1.0 : 1.0;
    const double scale = std::max(1.0, m.max_abs_entry());
    if (std::abs(m.c()) > tol * scale || std::abs(s * m.a() - 1.0) > tol * scale ||
        std::abs(s * m.d() - 1.0) > tol * scale)
        return std::numeric_limits<double>::quiet_NaN();
    return s * m.b();
}

BoundaryPoint vertex_boundary(const FundamentalPolygon& poly, int v) {
    return poly.vertices[static_cast<std::size_t>(v)].boundary;
}

struct CycleEntry {
    int vertex;
    GroupElement transform;  // maps the cycle's first vertex here
    Word word;
};

std::vector<CycleEntry> vertex_cycle(const FundamentalPolygon& poly, int v0, GroupElement& cycle_element,
                                     Word& cycle_word) {
    const int n = static_cast<int>(poly.sides.size());
    std::vector<CycleEntry> out;
    GroupElement t;
    Word tw;
    int v = v0;
    int s = v0;
    for (int guard = 0; guard <= 4 * n; ++guard) {
        out.push_back({v, t, tw});
        const Side& side = poly.sides[static_cast<std::size_t>(s)];
        const int s2 = side.partner;
        const BoundaryPoint image = mobius(side.pairing_inverse, vertex_boundary(poly, v));
        int v2 = -1;
        for (int cand : {s2, (s2 + 1) % n}) {
            const auto& pv = poly.vertices[static_cast<std::size_t>(cand)];
            if (pv.ideal && pv.boundary.near(image, 1e-6)) v2 = cand;
        }
        if (v2 < 0) throw Error(ErrorCode::InvalidPresentation, "side pairing does not carry ideal vertices to ideal vertices");
        t = hyp2::compose(side.pairing_inverse, t);
        Word next = side.pairing.inverse();
        next.append(tw);
        tw = std::move(next);
        const int s_next = (s2 == v2) ? (v2 - 1 + n) % n : v2;
        if (v2 == v0 && s_next == v0) {
            cycle_element = t;
            cycle_word = tw;
            return out;
        }
        v = v2;
        s = s_next;
    }
    throw Error(ErrorCode::InvalidPresentation, "ideal vertex cycle does not close");
}

}  // namespace

SurfaceGeometry make_geometry(std::string name, LatticePresentation pres, FundamentalPolygon polygon,
                              std::vector<CuspData> cusps) {
    SurfaceGeometry geom;
    geom.name = std::move(name);
    const bool derive = cusps.empty();
    for (const CuspData& c : cusps) {
        const GroupElement p = pres.evaluate(c.primitive_parabolic);
        if (hyp2::classify(p).kind != hyp2::Kind::Parabolic)
            throw Error(ErrorCode::InvalidPresentation, "cusp word " + pres.format(c.primitive_parabolic) + " is not parabolic");
        const double w = unipotent_parameter(c.normalizer, p, 1e-9);
        if (!(std::abs(w - c.width) <= 1e-9 * std::max(1.0, c.width)) || !(c.width > 0.0))
            throw Error(ErrorCode::InvalidPresentation, "cusp normalizer does not conjugate the cusp word to n(width)");
    }

    const int n = static_cast<int>(polygon.sides.size());
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<double> covered(cusps.size(), 0.0);
    for (int v0 = 0; v0 < n; ++v0) {
        if (!polygon.vertices[static_cast<std::size_t>(v0)].ideal || seen[static_cast<std::size_t>(v0)]) continue;
        GroupElement cyc;
        Word cyc_word;
        const auto cycle = vertex_cycle(polygon, v0, cyc, cyc_word);
        for (const auto& e : cycle) seen[static_cast<std::size_t>(e.vertex)] = true;
        if (hyp2::classify(cyc).kind != hyp2::Kind::Parabolic && std::abs(std::abs(cyc.trace()) - 2.0) > 1e-7)
            throw Error(ErrorCode::InvalidPresentation, "ideal vertex cycle transformation is not parabolic");

        int cusp = -1;
        std::size_t anchor = 0;
        if (derive) {
            CuspData c;
            c.fixed_point = vertex_boundary(polygon, v0);
            GroupElement g = point_normalizer(c.fixed_point);
            double w = unipotent_parameter(g, cyc, 1e-7);
            c.primitive_parabolic = cyc_word;
            if (w < 0.0) {
                c.primitive_parabolic = cyc_word.inverse();
                w = -w;
            }
            if (!(w > 0.0)) throw Error(ErrorCode::InvalidPresentation, "could not normalize derived cusp");
            c.normalizer = hyp2::compose(g, hyp2::translation(std::log(w)));
            c.width = 1.0;
            cusp = static_cast<int>(cusps.size());
            cusps.push_back(c);
            covered.push_back(0.0);
        } else {
            for (std::size_t k = 0; k < cycle.size() && cusp < 0; ++k) {
                const BoundaryPoint bp = vertex_boundary(polygon, cycle[k].vertex);
                for (std::size_t j = 0; j < cusps.size(); ++j) {
                    if (cusps[j].fixed_point.near(bp, 1e-9)) {
                        cusp = static_cast<int>(j);
                        anchor = k;
                        break;
                    }
                }
            }
            if (cusp < 0) throw Error(ErrorCode::InvalidPresentation, "ideal vertex without cusp data");
        }

        const CuspData& cd = cusps[static_cast<std::size_t>(cusp)];
        const GroupElement anchor_inv = hyp2::inverse(cycle[anchor].transform);
        const Word anchor_word_inv = cycle[anchor].word.inverse();
        for (const auto& e : cycle) {
            CuspFrame fr;
            fr.vertex = e.vertex;
            fr.cusp = cusp;
            const GroupElement conj = hyp2::compose(e.transform, anchor_inv);
            fr.conjugator = e.word;
            fr.conjugator.append(anchor_word_inv);
            fr.parabolic = fr.conjugator;
            fr.parabolic.append(cd.primitive_parabolic);
            fr.parabolic.append(fr.conjugator.inverse());
            fr.from_frame = hyp2::compose(conj, cd.normalizer);
            fr.to_frame = hyp2::inverse(fr.from_frame);
            fr.width = cd.width;
            // Incident sides become vertical lines in the frame.
            auto foot = [&](int side) {
                const auto ends = polygon.sides[static_cast<std::size_t>(side)].geodesic.endpoints();
                const BoundaryPoint a = mobius(fr.to_frame, ends.first);
                const BoundaryPoint b = mobius(fr.to_frame, ends.second);
                if (a.infinite == b.infinite) {
                    // Both finite: pick the one further from the frame's infinity image.
                    return std::abs(a.x) < std::abs(b.x) ? a.x : b.x;
                }
                return a.infinite ? b.x : a.x;
            };
            fr.u_right = foot((e.vertex - 1 + n) % n);
            fr.u_left = foot(e.vertex);
            if (!(fr.u_right > fr.u_left))
                throw Error(ErrorCode::InvalidPresentation, "cusp frame orientation is inconsistent");
            covered[static_cast<std::size_t>(cusp)] += fr.u_right - fr.u_left;
            geom.frames.push_back(std::move(fr));
        }
    }
    for (std::size_t j = 0; j < cusps.size(); ++j) {
        if (!(std::abs(covered[j] - cusps[j].width) <= 1e-6 * std::max(1.0, cusps[j].width))) {
            std::ostringstream os;
            os << "cusp " << j << " is covered with total width " << covered[j] << " but has width " << cusps[j].width;
            throw Error(ErrorCode::InvalidPresentation, os.str());
        }
    }

    geom.presentation = std::move(pres);
    geom.polygon = std::move(polygon);
    geom.cusps = std::move(cusps);

    int h = 0;
    while (horoball_overlap(geom, h).has_value()) {
        if (++h > 40) throw Error(ErrorCode::OverlappingHoroballs, "no disjoint cusp height found");
    }
    geom.disjoint_height = std::max(1, h);
    geom.accel_log_height = geom.disjoint_height + 1.0;
    return geom;
}

std::vector<std::string> builtin_names() { return {"gamma2", "punctured_square_torus"}; }

namespace {

SurfaceGeometry make_gamma2() {
    const GroupElement A = GroupElement::from_entries(1, 2, 0, 1);
    const GroupElement B = GroupElement::from_entries(1, 0, 2, 1);
    LatticePresentation pres({{"A", A}, {"B", B}}, {});
    const Word wA{{0, 1}}, wB{{1, 1}};

    FundamentalPolygon poly;
    poly.center = PointH::i();
    auto side = [&](Geodesic g, const Word& w, int partner) {
        Side s;
        s.geodesic = g;
        s.pairing = w;
        s.pairing_element = pres.evaluate(w);
        s.pairing_inverse = hyp2::inverse(s.pairing_element);
        s.partner = partner;
        return s;
    };
    poly.sides = {
        side(Geodesic::vertical(1.0, false), wA, 1),
        side(Geodesic::vertical(-1.0, true), wA.inverse(), 0),
        side(Geodesic::circle(-0.5, 0.5, true), wB.inverse(), 3),
        side(Geodesic::circle(0.5, 0.5, true), wB, 2),
    };
    auto ideal = [](BoundaryPoint b) {
        PolygonVertex v;
        v.ideal = true;
        v.boundary = b;
        return v;
    };
    poly.vertices = {ideal({1.0, false}), ideal(BoundaryPoint::at_infinity()), ideal({-1.0, false}),
                     ideal({0.0, false})};
    poly.area = 2.0 * kPi;

    std::vector<CuspData> cusps(3);
    cusps[0] = {BoundaryPoint::at_infinity(), hyp2::identity(), wA, 2.0};
    cusps[1] = {{0.0, false}, GroupElement::from_entries(0, -1, 1, 0), wB.inverse(), 2.0};
    Word w1 = wB;
    w1.append(wA.inverse());
    cusps[2] = {{1.0, false}, GroupElement::from_entries(1, -1, 1, 0), w1, 2.0};
    return make_geometry("gamma2", std::move(pres), std::move(poly), std::move(cusps));
}

SurfaceGeometry make_torus(const TorusParams& p) {
    if (!(p.l1 > 0.0) || !(p.l2 > 0.0))
        throw Error(ErrorCode::InvalidArgument, "torus translation lengths must be positive");
    if (!(std::abs(std::sinh(p.l1 / 2.0) * std::sinh(p.l2 / 2.0) - 1.0) <= 1e-9))
        throw Error(ErrorCode::InvalidArgument, "torus lengths must satisfy sinh(l1/2) sinh(l2/2) = 1");
    const GroupElement g1 = hyp2::compose(hyp2::compose(hyp2::rotation(-kPi / 2.0), hyp2::translation(p.l1)),
                                          hyp2::rotation(kPi / 2.0));
    const GroupElement g2 = hyp2::translation(p.l2);
    LatticePresentation pres({{"g1", g1}, {"g2", g2}}, {});
    const Word w1{{0, 1}}, w2{{1, 1}};
    FundamentalPolygon poly = polygon_from_words(pres, PointH::i(), {w1, w2, w1.inverse(), w2.inverse()});

    // One cusp; its loop is a commutator. Use whichever orientation has
    // positive width in the normalizer built from its fixed point.
    Word comm{{0, 1}, {1, 1}, {0, -1}, {1, -1}};
    GroupElement c = pres.evaluate(comm);
    double fp[2];
    if (hyp2::boundary_fixed_points(c, fp) != 1)
        throw Error(ErrorCode::InvalidArgument, "torus commutator is not parabolic");
    CuspData cd;
    cd.fixed_point = std::isinf(fp[0]) ? BoundaryPoint::at_infinity() : BoundaryPoint{fp[0], false};
    const GroupElement g = point_normalizer(cd.fixed_point);
    double w = unipotent_parameter(g, c, 1e-8);
    if (w < 0.0) {
        comm = comm.inverse();
        w = -w;
    }
    cd.primitive_parabolic = comm;
    cd.normalizer = hyp2::compose(g, hyp2::translation(std::log(w)));
    cd.width = 1.0;
    // Recompute the width from the final normalizer so the stored value is
    // consistent to rounding.
    cd.width = unipotent_parameter(cd.normalizer, pres.evaluate(comm), 1e-8);
    // Snap the fixed point to the polygon vertex it coincides with.
    for (const auto& v : poly.vertices)
        if (v.ideal && v.boundary.near(cd.fixed_point, 1e-7)) cd.fixed_point = v.boundary;
    return make_geometry("punctured_square_torus", std::move(pres), std::move(poly), {cd});
}

}  // namespace

SurfaceGeometry builtin_lattice(std::string_view name, const TorusParams& params) {
    if (name == "gamma2") return make_gamma2();
    if (name == "punctured_square_torus") return make_torus(params);
    throw Error(ErrorCode::InvalidArgument, "unknown lattice preset '" + std::string(name) + "'");
}

namespace detail {

GroupElement frame_parabolic_power(const CuspFrame& frame, long long k) {
    return hyp2::compose(hyp2::compose(frame.from_frame, hyp2::unipotent(static_cast<double>(k) * frame.width)),
                         frame.to_frame);
}

void throw_non_termination(int iterations) {
    throw Error(ErrorCode::NonTermination,
                "reduction did not terminate after " + std::to_string(iterations) + " steps");
}

}  // namespace detail

ReducedPoint reduce(const UnitTangent& x, const SurfaceGeometry& geom, const ReduceOptions& opt) {
    struct Recorder {
        const SurfaceGeometry& geom;
        std::vector<Word> moves;
        void side(int s) { moves.push_back(geom.polygon.sides[static_cast<std::size_t>(s)].pairing.inverse()); }
        void cusp(int f, long long k) { moves.push_back(geom.frames[static_cast<std::size_t>(f)].parabolic.power(k)); }
    } rec{geom, {}};
    const GroupElement rep = reduce_with(x.rep(), geom, rec, opt);
    ReducedPoint out;
    out.rep = UnitTangent(rep);
    for (auto it = rec.moves.rbegin(); it != rec.moves.rend(); ++it) out.deck_word.append(*it);
    return out;
}

CuspPosition cusp_position(const SurfaceGeometry& geom, const PointH& z) {
    CuspPosition best;
    for (std::size_t f = 0; f < geom.frames.size(); ++f) {
        const GroupElement& h = geom.frames[f].to_frame;
        const double cx = h.c() * z.x() + h.d();
        const double cy = h.c() * z.y();
        const double lh = std::log(z.y() / (cx * cx + cy * cy));
        if (lh > best.log_height) {
            best.log_height = lh;
            best.frame = static_cast<int>(f);
            best.cusp = geom.frames[f].cusp;
        }
    }
    return best;
}

}  // namespace covwalk::fuchsian
