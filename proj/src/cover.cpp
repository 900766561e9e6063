#include "covwalk/cover.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace covwalk::cover {

namespace {

std::string format_vec(const IntVec& v) {
    std::ostringstream os;
    os << '(';
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? ", " : "") << v[k];
    os << ')';
    return os.str();
}

IntVec diff_index(const IntVec& a, const IntVec& b) {
    IntVec r = a;
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= b[k];
    return r;
}

bool is_zero(const IntVec& v) {
    return std::all_of(v.begin(), v.end(), [](long long x) { return x == 0; });
}

std::vector<std::vector<double>> gram_schmidt(const std::vector<std::vector<double>>& in, std::size_t dim,
                                              std::vector<std::vector<double>> seed = {}) {
    std::vector<std::vector<double>> out = std::move(seed);
    for (const auto& v : in) {
        std::vector<double> w = v;
        for (const auto& q : out) {
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) dot += w[k] * q[k];
            for (std::size_t k = 0; k < dim; ++k) w[k] -= dot * q[k];
        }
        double n = 0.0;
        for (double x : w) n += x * x;
        n = std::sqrt(n);
        if (n < 1e-9) continue;
        for (double& x : w) x /= n;
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace

double norm(const IntVec& v) {
    double s = 0.0;
    for (long long x : v) s += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(s);
}

std::vector<long long> smith_invariants(std::vector<IntVec> m) {
    const std::size_t rows = m.size();
    const std::size_t cols = rows ? m[0].size() : 0;
    std::vector<long long> out;
    for (std::size_t t = 0; t < std::min(rows, cols); ++t) {
        for (;;) {
            // Smallest non-zero entry of the trailing block becomes the pivot.
            std::size_t pi = rows, pj = cols;
            for (std::size_t i = t; i < rows; ++i)
                for (std::size_t j = t; j < cols; ++j)
                    if (m[i][j] != 0 && (pi == rows || std::llabs(m[i][j]) < std::llabs(m[pi][pj]))) {
                        pi = i;
                        pj = j;
                    }
            if (pi == rows) return out;
            std::swap(m[t], m[pi]);
            for (auto& row : m) std::swap(row[t], row[pj]);
            const long long p = m[t][t];
            bool clean = true;
            for (std::size_t i = t + 1; i < rows; ++i) {
                const long long q = m[i][t] / p;
                for (std::size_t j = t; j < cols; ++j) m[i][j] -= q * m[t][j];
                if (m[i][t] != 0) clean = false;
            }
            for (std::size_t j = t + 1; j < cols; ++j) {
                const long long q = m[t][j] / p;
                for (std::size_t i = t; i < rows; ++i) m[i][j] -= q * m[i][t];
                if (m[t][j] != 0) clean = false;
            }
            if (!clean) continue;
            // The pivot must divide the rest of the block.
            bool divides = true;
            for (std::size_t i = t + 1; i < rows && divides; ++i)
                for (std::size_t j = t + 1; j < cols; ++j)
                    if (m[i][j] % p != 0) {
                        for (std::size_t k = t; k < cols; ++k) m[t][k] += m[i][k];
                        divides = false;
                        break;
                    }
            if (divides) break;
        }
        out.push_back(std::llabs(m[t][t]));
    }
    return out;
}

std::vector<IntVec> integer_row_basis(std::vector<IntVec> rows) {
    std::vector<IntVec> basis;
    if (rows.empty()) return basis;
    const std::size_t cols = rows[0].size();
    std::size_t r = 0;
    for (std::size_t c = 0; c < cols && r < rows.size(); ++c) {
        // Euclid on column c among rows r..end.
        for (;;) {
            std::size_t best = rows.size();
            for (std::size_t i = r; i < rows.size(); ++i)
                if (rows[i][c] != 0 && (best == rows.size() || std::llabs(rows[i][c]) < std::llabs(rows[best][c])))
                    best = i;
            if (best == rows.size()) break;
            std::swap(rows[r], rows[best]);
            bool done = true;
            for (std::size_t i = r + 1; i < rows.size(); ++i) {
                const long long q = rows[i][c] / rows[r][c];
                for (std::size_t k = 0; k < cols; ++k) rows[i][k] -= q * rows[r][k];
                if (rows[i][c] != 0) done = false;
            }
            if (done) {
                if (rows[r][c] < 0)
                    for (auto& x : rows[r]) x = -x;
                basis.push_back(rows[r]);
                ++r;
                break;
            }
        }
    }
    return basis;
}

bool CoverSpec::any_unfolded() const noexcept {
    return std::any_of(unfolded.begin(), unfolded.end(), [](bool b) { return b; });
}

IntVec phi(const CoverSpec& spec, const Word& w) {
    IntVec out(static_cast<std::size_t>(spec.d), 0);
    for (const auto& l : w.letters()) {
        const IntVec& row = spec.weights.at(static_cast<std::size_t>(l.generator));
        for (int k = 0; k < spec.d; ++k) out[static_cast<std::size_t>(k)] += l.exponent * row[static_cast<std::size_t>(k)];
    }
    return out;
}

CoverSpec validate_cover(const fuchsian::LatticePresentation& pres, const std::vector<fuchsian::CuspData>& cusps,
                         int d, std::vector<IntVec> weights) {
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "cover rank d must be at least 1");
    if (weights.size() != pres.rank())
        throw Error(ErrorCode::InvalidArgument, "expected weights for " + std::to_string(pres.rank()) + " generators, got " +
                                                    std::to_string(weights.size()));
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (static_cast<int>(weights[k].size()) != d)
            throw Error(ErrorCode::InvalidArgument, "weight row for '" + pres.generators()[k].label + "' has " +
                                                        std::to_string(weights[k].size()) + " entries, expected " +
                                                        std::to_string(d));
    }
    CoverSpec spec;
    spec.d = d;
    spec.weights = std::move(weights);
    for (std::size_t k = 0; k < pres.relators().size(); ++k) {
        const IntVec r = phi(spec, pres.relators()[k]);
        if (!is_zero(r)) {
            throw Error(ErrorCode::RelatorNotKilled,
                        "relator " + pres.format(pres.relators()[k]) + " maps to " + format_vec(r), pres.relator_line(k));
        }
    }
    const auto inv = smith_invariants(spec.weights);
    const bool free_rank_d = static_cast<int>(inv.size()) == d &&
                             std::all_of(inv.begin(), inv.end(), [](long long x) { return x == 1; });
    if (!free_rank_d) {
        std::ostringstream os;
        os << "weights do not map onto Z^" << d << " (Smith invariants";
        for (long long x : inv) os << ' ' << x;
        os << ')';
        throw Error(ErrorCode::QuotientNotFreeRankD, os.str());
    }
    for (const auto& c : cusps) {
        IntVec v = phi(spec, c.primitive_parabolic);
        spec.unfolded.push_back(!is_zero(v));
        spec.v.push_back(std::move(v));
    }
    spec.ec_basis = integer_row_basis(spec.v);
    std::vector<std::vector<double>> real_basis;
    for (const auto& b : spec.ec_basis) real_basis.emplace_back(b.begin(), b.end());
    const auto dim = static_cast<std::size_t>(d);
    spec.ec_orthonormal = gram_schmidt(real_basis, dim);
    std::vector<std::vector<double>> unit;
    for (std::size_t k = 0; k < dim; ++k) {
        std::vector<double> e(dim, 0.0);
        e[k] = 1.0;
        unit.push_back(std::move(e));
    }
    auto full = gram_schmidt(unit, dim, spec.ec_orthonormal);
    spec.complement_orthonormal.assign(full.begin() + static_cast<std::ptrdiff_t>(spec.ec_orthonormal.size()), full.end());
    return spec;
}

CoverModel::CoverModel(SurfaceGeometry geom, CoverSpec spec) : geom_(std::move(geom)), spec_(std::move(spec)) {
    for (const auto& s : geom_.polygon.sides) side_phi_.push_back(phi(spec_, s.pairing));
    for (const auto& f : geom_.frames) frame_phi_.push_back(phi(spec_, f.parabolic));
}

namespace {

struct IndexVisitor {
    const std::vector<IntVec>& side_phi;
    const std::vector<IntVec>& frame_phi;
    IntVec& index;
    // deck = pairing(s)^-1, so index - phi(deck) = index + phi(pairing(s))
    void side(int s) {
        const IntVec& p = side_phi[static_cast<std::size_t>(s)];
        for (std::size_t k = 0; k < index.size(); ++k) index[k] += p[k];
    }
    void cusp(int f, long long power) {
        const IntVec& p = frame_phi[static_cast<std::size_t>(f)];
        for (std::size_t k = 0; k < index.size(); ++k) index[k] -= power * p[k];
    }
};

}  // namespace

CoverPoint CoverModel::lift(const UnitTangent& x) const {
    CoverPoint p;
    p.index.assign(static_cast<std::size_t>(spec_.d), 0);
    IndexVisitor vis{side_phi_, frame_phi_, p.index};
    p.rep = UnitTangent(fuchsian::reduce_with(x.rep(), geom_, vis));
    return p;
}

void CoverModel::step(CoverPoint& p, const GroupElement& g) const {
    IndexVisitor vis{side_phi_, frame_phi_, p.index};
    // compose() does not rescale, so the determinant is restored on every step
    p.rep = UnitTangent(hyp2::renormalize(fuchsian::reduce_with(hyp2::compose(p.rep.rep(), g), geom_, vis)));
}

CoverPoint CoverModel::apply_step(const CoverPoint& p, const GroupElement& g) const {
    CoverPoint q = p;
    step(q, g);
    return q;
}

std::vector<IntVec> CoverModel::sigma_path(const CoverPoint& start, const std::vector<GroupElement>& letters) const {
    std::vector<IntVec> out;
    out.reserve(letters.size());
    CoverPoint p = start;
    for (const auto& g : letters) {
        step(p, g);
        IntVec s = p.index;
        for (std::size_t k = 0; k < s.size(); ++k) s[k] -= start.index[k];
        out.push_back(std::move(s));
    }
    return out;
}

IntVec CoverModel::sigma(const CoverPoint& start, const std::vector<GroupElement>& letters) const {
    CoverPoint p = start;
    for (const auto& g : letters) step(p, g);
    IntVec s = p.index;
    for (std::size_t k = 0; k < s.size(); ++k) s[k] -= start.index[k];
    return s;
}

std::optional<FiniteOrbit> enumerate_orbit(const CoverModel& model, const CoverPoint& start,
                                           const std::vector<GroupElement>& atoms, std::size_t max_states, double tol) {
    FiniteOrbit orbit;
    orbit.states.push_back(start);
    for (std::size_t s = 0; s < orbit.states.size(); ++s) {
        std::vector<int> next;
        std::vector<IntVec> delta;
        for (const auto& g : atoms) {
            const CoverPoint q = model.apply_step(orbit.states[s], g);
            int found = -1;
            for (std::size_t k = 0; k < orbit.states.size(); ++k) {
                if (hyp2::psl_distance(orbit.states[k].rep.rep(), q.rep.rep()) <= tol) {
                    found = static_cast<int>(k);
                    break;
                }
            }
            if (found < 0) {
                if (orbit.states.size() >= max_states) return std::nullopt;
                found = static_cast<int>(orbit.states.size());
                orbit.states.push_back(q);
            }
            delta.push_back(diff_index(q.index, orbit.states[s].index));
            next.push_back(found);
        }
        orbit.next.push_back(std::move(next));
        orbit.delta.push_back(std::move(delta));
    }
    return orbit;
}

std::vector<ExcursionRecord> cusp_excursions(const std::vector<TrajectorySample>& samples, double h) {
    std::vector<ExcursionRecord> out;
    std::size_t i = 0;
    while (i < samples.size()) {
        if (!(samples[i].log_height > h) || samples[i].cusp < 0) {
            ++i;
            continue;
        }
        const int cusp = samples[i].cusp;
        const std::size_t a = i;
        double top = samples[i].log_height;
        while (i + 1 < samples.size() && samples[i + 1].cusp == cusp && samples[i + 1].log_height > h) {
            ++i;
            top = std::max(top, samples[i].log_height);
        }
        const std::size_t b = i;
        const TrajectorySample& before = samples[a == 0 ? 0 : a - 1];
        ExcursionRecord rec;
        rec.cusp = cusp;
        rec.entry_step = samples[a].step;
        rec.exit_step = samples[b].step;
        rec.max_height = top;
        rec.index_delta = samples[b].index;
        for (std::size_t k = 0; k < rec.index_delta.size(); ++k) rec.index_delta[k] -= before.index[k];
        out.push_back(std::move(rec));
        ++i;
    }
    return out;
}

double sigma_cusp_ratio(const CoverModel& model, int cusp, double t, const std::vector<GroupElement>& support,
                        int samples, random::Stream& rng) {
    const auto& geom = model.geometry();
    const fuchsian::CuspFrame* frame = nullptr;
    for (const auto& f : geom.frames)
        if (f.cusp == cusp) {
            frame = &f;
            break;
        }
    if (frame == nullptr) throw Error(ErrorCode::InvalidArgument, "unknown cusp index");
    double worst = 0.0;
    const double scale = std::exp(t);
    for (int k = 0; k < samples; ++k) {
        const double u = frame->u_left + rng.uniform() * frame->width;
        const GroupElement local = hyp2::compose(hyp2::compose(hyp2::unipotent(u), hyp2::translation(t)),
                                                 hyp2::rotation(rng.uniform(0.0, hyp2::kTwoPi)));
        const CoverPoint p = model.lift(UnitTangent(hyp2::compose(frame->from_frame, local)));
        for (const auto& g : support) {
            const CoverPoint q = model.apply_step(p, g);
            IntVec s = q.index;
            for (std::size_t j = 0; j < s.size(); ++j) s[j] -= p.index[j];
            worst = std::max(worst, norm(s) / scale);
        }
    }
    return worst;
}

}  // namespace covwalk::cover
