#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "covwalk/fuchsian.hpp"
#include "polygon_internal.hpp"

namespace covwalk::fuchsian {

namespace {

using cplx = std::complex<double>;
constexpr double kPi = std::numbers::pi;

}  // namespace

bool BoundaryPoint::near(const BoundaryPoint& other, double tol) const {
    if (infinite || other.infinite) return infinite == other.infinite;
    return std::abs(x - other.x) <= tol * std::max(1.0, std::abs(x));
}

BoundaryPoint mobius(const GroupElement& g, const BoundaryPoint& p) {
    if (p.infinite) {
        if (g.c() == 0.0) return BoundaryPoint::at_infinity();
        return {g.a() / g.c(), false};
    }
    const double den = g.c() * p.x + g.d();
    const double num = g.a() * p.x + g.b();
    if (std::abs(den) <= 1e-15 * std::max(1.0, std::abs(num))) return BoundaryPoint::at_infinity();
    return {num / den, false};
}

Geodesic Geodesic::vertical(double x0, bool inside_is_right) {
    Geodesic g;
    g.alpha = 0.0;
    g.beta = inside_is_right ? -1.0 : 1.0;
    g.gamma = inside_is_right ? x0 : -x0;
    return g;
}

Geodesic Geodesic::circle(double center, double radius, bool inside_is_outside) {
    Geodesic g;
    const double s = inside_is_outside ? -1.0 : 1.0;
    g.alpha = s / (2.0 * radius);
    g.beta = -s * center / radius;
    g.gamma = s * (center * center - radius * radius) / (2.0 * radius);
    return g;
}

Geodesic Geodesic::bisector(const PointH& c, const PointH& w) {
    // y_w |z - c|^2 - y_c |z - w|^2 <= 0 is the side containing c.
    const double c2 = c.x() * c.x() + c.y() * c.y();
    const double w2 = w.x() * w.x() + w.y() * w.y();
    double alpha = w.y() - c.y();
    double beta = -2.0 * (w.y() * c.x() - c.y() * w.x());
    double gamma = w.y() * c2 - c.y() * w2;
    const double disc = beta * beta - 4.0 * alpha * gamma;
    if (!(disc > 0.0)) throw Error(ErrorCode::InvalidArgument, "bisector of coincident points");
    const double s = 1.0 / std::sqrt(disc);
    Geodesic g;
    g.alpha = alpha * s;
    g.beta = beta * s;
    g.gamma = gamma * s;
    return g;
}

std::pair<BoundaryPoint, BoundaryPoint> Geodesic::endpoints() const {
    if (alpha == 0.0) return {{-gamma / beta, false}, BoundaryPoint::at_infinity()};
    // Roots of alpha x^2 + beta x + gamma with unit discriminant, in stable form.
    const double q = -0.5 * (beta + (beta >= 0.0 ? 1.0 : -1.0));
    BoundaryPoint r1{q / alpha, false};
    BoundaryPoint r2{gamma / q, false};
    if (!std::isfinite(r1.x) || std::abs(r1.x) > 1e12) r1 = BoundaryPoint::at_infinity();
    if (r1.infinite || (!r2.infinite && r2.x < r1.x)) std::swap(r1, r2);
    return {r1, r2};
}

bool FundamentalPolygon::contains(const PointH& z, double eps) const {
    for (const Side& s : sides)
        if (s.geodesic.value(z.x(), z.y()) / z.y() > eps) return false;
    return true;
}

double FundamentalPolygon::max_violation(const PointH& z) const {
    double worst = -std::numeric_limits<double>::infinity();
    for (const Side& s : sides) worst = std::max(worst, s.geodesic.signed_distance(z));
    return worst;
}

std::size_t FundamentalPolygon::ideal_vertex_count() const {
    return static_cast<std::size_t>(
        std::count_if(vertices.begin(), vertices.end(), [](const PolygonVertex& v) { return v.ideal; }));
}

namespace detail {

KleinChart::KleinChart(const PointH& center) : c_(center.x(), center.y()) {}

KleinChart::Point KleinChart::to_klein(const PointH& z) const {
    const cplx w(z.x(), z.y());
    const cplx p = (w - c_) / (w - std::conj(c_));
    const cplx k = 2.0 * p / (1.0 + std::norm(p));
    return {k.real(), k.imag()};
}

PointH KleinChart::from_klein(Point k) const {
    const cplx kk(k.x, k.y);
    const double r2 = std::min(std::norm(kk), 1.0);
    const cplx p = kk / (1.0 + std::sqrt(1.0 - r2));
    const cplx z = (c_ - p * std::conj(c_)) / (1.0 - p);
    return {z.real(), std::max(z.imag(), std::numeric_limits<double>::min())};
}

BoundaryPoint KleinChart::boundary_from_klein(Point k) const {
    const double r = std::hypot(k.x, k.y);
    const cplx p(k.x / r, k.y / r);
    if (std::abs(1.0 - p) < 1e-13) return BoundaryPoint::at_infinity();
    const cplx z = (c_ - p * std::conj(c_)) / (1.0 - p);
    return {z.real(), false};
}

KleinChart::Point KleinChart::boundary_to_klein(const BoundaryPoint& b) const {
    if (b.infinite) return {1.0, 0.0};
    const cplx w(b.x, 0.0);
    const cplx p = (w - c_) / (w - std::conj(c_));
    return {p.real(), p.imag()};
}

ClipPolygon::ClipPolygon() {
    const double s = 1.5;
    verts_ = {{-s, -s, -1}, {s, -s, -1}, {s, s, -1}, {-s, s, -1}};
}

bool ClipPolygon::clip(const HalfPlane& hp, int label) {
    auto f = [&](const Vertex& v) { return v.x * hp.ux + v.y * hp.uy - hp.h; };
    constexpr double kInsideSlack = 1e-14;
    bool any_out = false;
    for (const Vertex& v : verts_) {
        if (f(v) > kInsideSlack) {
            any_out = true;
            break;
        }
    }
    if (!any_out) return false;

    std::vector<Vertex> out;
    out.reserve(verts_.size() + 1);
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vertex& p = verts_[i];
        const Vertex& q = verts_[(i + 1) % n];
        const double fp = f(p), fq = f(q);
        const bool pin = fp <= kInsideSlack;
        const bool qin = fq <= kInsideSlack;
        auto cross = [&]() {
            const double t = fp / (fp - fq);
            return Vertex{p.x + t * (q.x - p.x), p.y + t * (q.y - p.y), -1};
        };
        if (pin) {
            out.push_back(p);
            if (!qin) {
                Vertex v = cross();
                v.label = label;
                out.push_back(v);
            }
        } else if (qin) {
            Vertex v = cross();
            v.label = p.label;
            out.push_back(v);
        }
    }
    verts_ = std::move(out);
    merge_close(1e-12);
    return true;
}

void ClipPolygon::merge_close(double tol) {
    bool changed = true;
    while (changed && verts_.size() > 1) {
        changed = false;
        const std::size_t n = verts_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vertex& a = verts_[i];
            const Vertex& b = verts_[(i + 1) % n];
            if (std::hypot(a.x - b.x, a.y - b.y) < tol) {
                // a's outgoing edge is degenerate; b keeps its own outgoing edge.
                verts_.erase(verts_.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
}

double ClipPolygon::max_radius() const {
    double r = 0.0;
    for (const Vertex& v : verts_) r = std::max(r, std::hypot(v.x, v.y));
    return r;
}

std::vector<int> ClipPolygon::labels_meeting_disk() const {
    std::vector<int> out;
    const std::size_t n = verts_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vertex& p = verts_[i];
        const Vertex& q = verts_[(i + 1) % n];
        if (p.label < 0) continue;
        // distance from the origin to segment pq
        const double dx = q.x - p.x, dy = q.y - p.y;
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0.0 ? -(p.x * dx + p.y * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        if (std::hypot(p.x + t * dx, p.y + t * dy) < 1.0 - 1e-12) out.push_back(p.label);
    }
    return out;
}

void CutCollector::add(const Word& w, const GroupElement& g) { add(w.letters(), g); }

void CutCollector::add(const std::vector<Letter>& letters, const GroupElement& g) {
    const PointH q = hyp2::mobius(g, center_);
    const double dist = hyp2::distance(center_, q);
    if (dist < 1e-9) {
        if (hyp2::psl_distance(g, hyp2::identity()) <= 1e-9) return;
        throw Error(ErrorCode::EllipticCenter, "center is fixed by a non-trivial group element");
    }
    const auto k = chart_.to_klein(q);
    const double r = std::hypot(k.x, k.y);
    HalfPlane hp{k.x / r, k.y / r, std::tanh(dist / 2.0)};
    if (clip_.clip(hp, static_cast<int>(cuts_.size()))) {
        Word w;
        for (const Letter& l : letters) w.push_back(l);
        cuts_.push_back({std::move(w), g, q, hp});
    }
}

}  // namespace detail

namespace {

double side_angle(const detail::HalfPlane& a, const detail::HalfPlane& b) {
    // Interior angle between two sides from their Minkowski normals (h, u).
    const double inner = -a.h * b.h + a.ux * b.ux + a.uy * b.uy;
    const double na = std::sqrt(std::max(0.0, 1.0 - a.h * a.h));
    const double nb = std::sqrt(std::max(0.0, 1.0 - b.h * b.h));
    const double cosv = std::clamp(-inner / (na * nb), -1.0, 1.0);
    return std::acos(cosv);
}

}  // namespace

FundamentalPolygon detail::assemble_polygon(const CutCollector& cc) {
    const auto& verts = cc.clip().vertices();
    const auto& cuts = cc.cuts();
    if (verts.size() < 3) throw Error(ErrorCode::AreaMismatch, "degenerate polygon");
    if (cc.clip().max_radius() > 1.0 + 1e-9) {
        throw Error(ErrorCode::AreaMismatch, "polygon reaches the circle at infinity along an arc (infinite area)");
    }
    for (const auto& v : verts)
        if (v.label < 0) throw Error(ErrorCode::AreaMismatch, "unbounded polygon");

    const KleinChart& chart = cc.chart();
    FundamentalPolygon poly;
    poly.center = cc.center();
    const std::size_t n = verts.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& cut = cuts[static_cast<std::size_t>(verts[i].label)];
        Side s;
        s.geodesic = Geodesic::bisector(poly.center, cut.image);
        s.pairing = cut.word;
        s.pairing_element = cut.element;
        s.pairing_inverse = hyp2::inverse(cut.element);
        poly.sides.push_back(std::move(s));
    }
    double angle_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = verts[i];
        const auto& in_cut = cuts[static_cast<std::size_t>(verts[(i + n - 1) % n].label)];
        const auto& out_cut = cuts[static_cast<std::size_t>(v.label)];
        PolygonVertex pv;
        if (std::hypot(v.x, v.y) >= 1.0 - 1e-9) {
            pv.ideal = true;
            // Snap to the nearest exact endpoint of the two incident sides.
            const BoundaryPoint rough = chart.boundary_from_klein({v.x, v.y});
            BoundaryPoint best = rough;
            double best_d = std::numeric_limits<double>::infinity();
            for (const Side* s : {&poly.sides[(i + n - 1) % n], &poly.sides[i]}) {
                const auto ends = s->geodesic.endpoints();
                for (const BoundaryPoint& e : {ends.first, ends.second}) {
                    const auto ke = chart.boundary_to_klein(e);
                    const double d = std::hypot(ke.x - v.x, ke.y - v.y);
                    if (d < best_d) {
                        best_d = d;
                        best = e;
                    }
                }
            }
            pv.boundary = best_d < 1e-6 ? best : rough;
        } else {
            const PointH z = chart.from_klein({v.x, v.y});
            pv.x = z.x();
            pv.y = z.y();
            pv.angle = side_angle(in_cut.plane, out_cut.plane);
            angle_sum += pv.angle;
        }
        poly.vertices.push_back(pv);
    }
    poly.area = static_cast<double>(n - 2) * kPi - angle_sum;

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (hyp2::psl_relative_distance(poly.sides[j].pairing_element, poly.sides[i].pairing_inverse) <= 1e-8) {
                poly.sides[i].partner = static_cast<int>(j);
                break;
            }
        }
        if (poly.sides[i].partner < 0) {
            throw Error(ErrorCode::AreaMismatch, "side " + std::to_string(i) + " has no paired side");
        }
    }
    return poly;
}

FundamentalPolygon polygon_from_words(const LatticePresentation& pres, const PointH& center,
                                      const std::vector<Word>& words) {
    detail::CutCollector cc(center);
    for (const Word& w : words) cc.add(w, pres.evaluate(w));
    return detail::assemble_polygon(cc);
}

namespace detail {

void enumerate_words(const LatticePresentation& pres, int bound, CutCollector& cc) {
    if (bound <= 0) return;
    const int r = static_cast<int>(pres.rank());
    struct Frame {
        GroupElement g;
        Letter last;
    };
    // Depth-first over freely reduced words; each stack level holds the
    // element and the next letter to try.
    std::vector<Frame> stack;
    std::vector<int> next;
    stack.push_back({hyp2::identity(), {-1, 0}});
    next.push_back(0);
    std::vector<Letter> path;
    while (!stack.empty()) {
        const std::size_t depth = stack.size() - 1;
        int& choice = next.back();
        if (choice >= 2 * r || static_cast<int>(depth) >= bound) {
            stack.pop_back();
            next.pop_back();
            if (!path.empty()) path.pop_back();
            continue;
        }
        const int gen = choice / 2;
        const long long exp = (choice % 2 == 0) ? 1 : -1;
        ++choice;
        const Letter& last = stack.back().last;
        if (last.generator == gen && last.exponent == -exp) continue;
        const GroupElement& step = exp > 0 ? pres.element(gen) : pres.element_inverse(gen);
        GroupElement g = hyp2::compose(stack.back().g, step);
        path.push_back({gen, exp});
        cc.add(path, g);
        stack.push_back({g, {gen, exp}});
        next.push_back(0);
    }
}

}  // namespace detail

FundamentalPolygon dirichlet_domain(const LatticePresentation& pres, const PointH& center, int word_length_bound) {
    detail::CutCollector cc(center);
    detail::enumerate_words(pres, word_length_bound, cc);
    FundamentalPolygon poly = detail::assemble_polygon(cc);
    const double expected = 2.0 * kPi * std::abs(pres.euler_characteristic());
    if (!(std::abs(poly.area - expected) <= 1e-6)) {
        throw Error(ErrorCode::AreaMismatch, "polygon area " + std::to_string(poly.area) + " differs from " +
                                                 std::to_string(expected) + "; raise the word length bound");
    }
    return poly;
}

std::vector<Word> dirichlet_side_words(const LatticePresentation& pres, const PointH& center, int word_length_bound) {
    detail::CutCollector cc(center);
    detail::enumerate_words(pres, word_length_bound, cc);
    std::vector<Word> out;
    for (int label : cc.clip().labels_meeting_disk()) out.push_back(cc.cuts()[static_cast<std::size_t>(label)].word);
    return out;
}

}  // namespace covwalk::fuchsian
