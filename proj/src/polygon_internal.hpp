#pragma once

// Klein-model clipping used to build Dirichlet polygons. In the Klein disk
// about the center c, the half-plane {d(z, c) <= d(z, g c)} is the Euclidean
// half-plane {k . u <= tanh(d(c, g c) / 2)} with u the direction of g c.

#include <complex>
#include <vector>

#include "covwalk/fuchsian.hpp"

namespace covwalk::fuchsian::detail {

class KleinChart {
public:
    struct Point {
        double x, y;
    };

    explicit KleinChart(const PointH& center);

    Point to_klein(const PointH& z) const;
    PointH from_klein(Point k) const;
    BoundaryPoint boundary_from_klein(Point k) const;
    Point boundary_to_klein(const BoundaryPoint& b) const;

private:
    std::complex<double> c_;
};

struct HalfPlane {
    double ux, uy, h;
};

/// Convex polygon in the Klein plane; each vertex carries the label of its
/// outgoing edge (-1 for the initial bounding square).
class ClipPolygon {
public:
    struct Vertex {
        double x, y;
        int label;
    };

    ClipPolygon();

    /// Returns true when the half-plane removed part of the polygon.
    bool clip(const HalfPlane& hp, int label);

    const std::vector<Vertex>& vertices() const noexcept { return verts_; }
    double max_radius() const;
    std::vector<int> labels_meeting_disk() const;

private:
    void merge_close(double tol);

    std::vector<Vertex> verts_;
};

struct Cut {
    Word word;
    GroupElement element;
    PointH image;  // element * center
    HalfPlane plane;
};

/// Accumulates bisector half-planes, keeping only those that ever cut.
class CutCollector {
public:
    explicit CutCollector(const PointH& center) : center_(center), chart_(center) {}

    void add(const Word& w, const GroupElement& g);
    void add(const std::vector<Letter>& letters, const GroupElement& g);

    const PointH& center() const noexcept { return center_; }
    const KleinChart& chart() const noexcept { return chart_; }
    const ClipPolygon& clip() const noexcept { return clip_; }
    const std::vector<Cut>& cuts() const noexcept { return cuts_; }

private:
    PointH center_;
    KleinChart chart_;
    ClipPolygon clip_;
    std::vector<Cut> cuts_;
};

FundamentalPolygon assemble_polygon(const CutCollector& cc);
void enumerate_words(const LatticePresentation& pres, int bound, CutCollector& cc);

}  // namespace covwalk::fuchsian::detail
