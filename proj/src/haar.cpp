#include <algorithm>
#include <cmath>
#include <sstream>

#include "covwalk/fuchsian.hpp"

namespace covwalk::fuchsian {

namespace {

/// Horoball {Im > H} of a frame, seen in the half-plane: either a disk
/// tangent to the real line at `x` of Euclidean diameter `diameter`, or the
/// region above `height` when the vertex is infinity.
struct Horoball {
    bool at_infinity = false;
    double x = 0.0;
    double diameter = 0.0;
    double height = 0.0;
};

Horoball horoball(const CuspFrame& fr, double big_h) {
    const GroupElement& g = fr.from_frame;
    Horoball b;
    if (std::abs(g.c()) <= 1e-14 * std::max(1.0, g.max_abs_entry())) {
        b.at_infinity = true;
        b.height = g.a() * g.a() * big_h;
    } else {
        b.x = g.a() / g.c();
        b.diameter = 1.0 / (g.c() * g.c() * big_h);
    }
    return b;
}

}  // namespace

std::optional<std::string> horoball_overlap(const SurfaceGeometry& geom, double h) {
    const double big_h = std::exp(h);
    const auto& frames = geom.frames;
    const int n = static_cast<int>(geom.polygon.sides.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const Horoball bi = horoball(frames[i], big_h);
        for (std::size_t j = i + 1; j < frames.size(); ++j) {
            const Horoball bj = horoball(frames[j], big_h);
            bool overlap = false;
            if (bi.at_infinity && bj.at_infinity) {
                overlap = true;
            } else if (bi.at_infinity || bj.at_infinity) {
                const Horoball& inf = bi.at_infinity ? bi : bj;
                const Horoball& fin = bi.at_infinity ? bj : bi;
                overlap = fin.diameter > inf.height * (1.0 + 1e-12);
            } else {
                const double dx = bi.x - bj.x;
                overlap = dx * dx < bi.diameter * bj.diameter * (1.0 - 1e-12);
            }
            if (overlap) {
                std::ostringstream os;
                os << "horoballs at polygon vertices " << frames[i].vertex << " and " << frames[j].vertex
                   << " overlap at log-height " << h;
                return os.str();
            }
        }
        // Sides not incident to this vertex must stay below the horocycle.
        const int v = frames[i].vertex;
        for (int s = 0; s < n; ++s) {
            if (s == v || s == (v - 1 + n) % n) continue;
            const auto ends = geom.polygon.sides[static_cast<std::size_t>(s)].geodesic.endpoints();
            const BoundaryPoint a = mobius(frames[i].to_frame, ends.first);
            const BoundaryPoint b = mobius(frames[i].to_frame, ends.second);
            const bool too_high = a.infinite || b.infinite || std::abs(a.x - b.x) / 2.0 > big_h * (1.0 + 1e-12);
            if (too_high) {
                std::ostringstream os;
                os << "side " << s << " rises into the horoball at vertex " << v << " at log-height " << h;
                return os.str();
            }
        }
    }
    return std::nullopt;
}

bool CuspNeighborhoods::in_core(const SurfaceGeometry& geom, const PointH& z) const {
    return geom.polygon.contains(z, 1e-9) && cusp_position(geom, z).log_height <= log_height;
}

CuspNeighborhoods cusp_neighborhoods(const SurfaceGeometry& geom, double h) {
    if (auto msg = horoball_overlap(geom, h)) throw Error(ErrorCode::OverlappingHoroballs, *msg);
    CuspNeighborhoods nb;
    nb.log_height = h;
    nb.total_area = geom.polygon.area;
    double sector_area = 0.0;
    for (std::size_t j = 0; j < geom.cusps.size(); ++j) {
        CuspSector s;
        s.cusp = static_cast<int>(j);
        s.width = geom.cusps[j].width;
        s.area = s.width * std::exp(-h);
        sector_area += s.area;
        nb.sectors.push_back(s);
    }
    nb.core_area = nb.total_area - sector_area;

    // Bounding box of the core from points along the sides and horocycles.
    double x_min = std::numeric_limits<double>::infinity(), x_max = -x_min;
    double y_min = x_min, y_max = -x_min;
    auto take = [&](const PointH& z) {
        if (!geom.polygon.contains(z, 1e-7) || cusp_position(geom, z).log_height > h + 1e-9) return;
        x_min = std::min(x_min, z.x());
        x_max = std::max(x_max, z.x());
        y_min = std::min(y_min, z.y());
        y_max = std::max(y_max, z.y());
    };
    constexpr int kSamples = 4000;
    constexpr double kReach = 40.0;
    for (const Side& s : geom.polygon.sides) {
        const Geodesic& g = s.geodesic;
        for (int k = 0; k <= kSamples; ++k) {
            const double t = -kReach + 2.0 * kReach * k / kSamples;
            if (g.is_vertical()) {
                take(PointH(-g.gamma / g.beta, std::exp(t)));
            } else {
                const double center = -g.beta / (2.0 * g.alpha);
                const double radius = 1.0 / (2.0 * std::abs(g.alpha));
                take(PointH(center + radius * std::tanh(t), radius / std::cosh(t)));
            }
        }
    }
    const double big_h = std::exp(h);
    for (const CuspFrame& fr : geom.frames) {
        for (int k = 0; k <= kSamples; ++k) {
            const double u = fr.u_left + (fr.u_right - fr.u_left) * k / kSamples;
            take(hyp2::mobius(fr.from_frame, PointH(u, big_h)));
        }
    }
    if (!(y_min > 0.0) || !(x_max >= x_min))
        throw Error(ErrorCode::InvalidArgument, "could not bound the compact core");
    const double pad = 0.01 * (x_max - x_min) + 1e-9;
    nb.core_box = {x_min - pad, x_max + pad, y_min / 1.02, y_max * 1.02};
    return nb;
}

UnitTangent haar_sample(const SurfaceGeometry& geom, const CuspNeighborhoods& nbhd, random::Stream& rng) {
    const double theta = rng.uniform(0.0, hyp2::kTwoPi);
    double pick = rng.uniform() * nbhd.total_area;
    if (pick < nbhd.core_area) {
        const CoreBox& b = nbhd.core_box;
        for (;;) {
            const double x = rng.uniform(b.x_min, b.x_max);
            // dx dy / y^2 = dx d(1/y): uniform in 1/y
            const double inv_y = rng.uniform(1.0 / b.y_max, 1.0 / b.y_min);
            const PointH z(x, 1.0 / inv_y);
            if (nbhd.in_core(geom, z)) return hyp2::rotate_fiber(UnitTangent::upright_at(z), theta);
        }
    }
    pick -= nbhd.core_area;
    std::size_t j = 0;
    while (j + 1 < nbhd.sectors.size() && pick >= nbhd.sectors[j].area) {
        pick -= nbhd.sectors[j].area;
        ++j;
    }
    const int cusp = nbhd.sectors[j].cusp;
    const CuspFrame* frame = nullptr;
    for (const CuspFrame& fr : geom.frames) {
        if (fr.cusp == cusp) {
            frame = &fr;
            break;
        }
    }
    const double u = frame->u_left + rng.uniform() * frame->width;
    const double log_y = nbhd.log_height + rng.exponential(1.0);
    const GroupElement local = hyp2::compose(
        hyp2::compose(hyp2::unipotent(u), hyp2::translation(log_y)), hyp2::rotation(theta));
    const GroupElement rep = hyp2::compose(frame->from_frame, local);
    return UnitTangent(reduce_with(rep, geom, NullReduceVisitor{}));
}

}  // namespace covwalk::fuchsian
