#include <cctype>
#include <charconv>
#include <sstream>

#include "covwalk/fuchsian.hpp"

namespace covwalk::fuchsian {

Word::Word(std::initializer_list<Letter> letters) {
    for (const Letter& l : letters) push_back(l);
}

void Word::push_back(Letter letter) {
    if (letter.exponent == 0) return;
    if (!letters_.empty() && letters_.back().generator == letter.generator) {
        letters_.back().exponent += letter.exponent;
        if (letters_.back().exponent == 0) letters_.pop_back();
        return;
    }
    letters_.push_back(letter);
}

void Word::append(const Word& other, long long power) {
    if (power == 0) return;
    const Word& base = other;
    if (power < 0) {
        const Word inv = other.inverse();
        for (long long k = 0; k < -power; ++k)
            for (const Letter& l : inv.letters_) push_back(l);
        return;
    }
    for (long long k = 0; k < power; ++k)
        for (const Letter& l : base.letters_) push_back(l);
}

Word Word::inverse() const {
    Word out;
    out.letters_.reserve(letters_.size());
    for (auto it = letters_.rbegin(); it != letters_.rend(); ++it) out.letters_.push_back({it->generator, -it->exponent});
    return out;
}

Word Word::power(long long k) const {
    // A single-letter word stays one letter for any power.
    if (letters_.size() == 1) {
        Word out;
        out.push_back({letters_[0].generator, letters_[0].exponent * k});
        return out;
    }
    Word out;
    out.append(*this, k);
    return out;
}

long long Word::length() const noexcept {
    long long n = 0;
    for (const Letter& l : letters_) n += l.exponent < 0 ? -l.exponent : l.exponent;
    return n;
}

LatticePresentation::LatticePresentation(std::vector<Generator> generators, std::vector<Word> relators,
                                         std::vector<int> relator_lines)
    : generators_(std::move(generators)), relators_(std::move(relators)), relator_lines_(std::move(relator_lines)) {
    if (generators_.empty()) throw Error(ErrorCode::InvalidPresentation, "presentation has no generators");
    inverses_.reserve(generators_.size());
    for (std::size_t k = 0; k < generators_.size(); ++k) {
        const Generator& g = generators_[k];
        if (g.label.empty()) throw Error(ErrorCode::InvalidPresentation, "empty generator label");
        for (std::size_t j = 0; j < k; ++j) {
            if (generators_[j].label == g.label)
                throw Error(ErrorCode::InvalidPresentation, "duplicate generator label '" + g.label + "'");
        }
        const auto kind = hyp2::classify(g.element).kind;
        if (kind == hyp2::Kind::Elliptic || kind == hyp2::Kind::Identity) {
            throw Error(ErrorCode::InvalidPresentation,
                        "generator '" + g.label + "' is " + hyp2::to_string(kind) + "; lattice must be torsion-free");
        }
        inverses_.push_back(hyp2::inverse(g.element));
    }
    for (std::size_t k = 0; k < relators_.size(); ++k) {
        for (const Letter& l : relators_[k].letters()) {
            if (l.generator < 0 || l.generator >= static_cast<int>(generators_.size()))
                throw Error(ErrorCode::InvalidPresentation, "relator uses an unknown generator", relator_line(k));
        }
        const double err = hyp2::psl_distance(evaluate(relators_[k]), hyp2::identity());
        if (!(err <= kRelatorTolerance)) {
            throw Error(ErrorCode::InvalidPresentation,
                        "relator " + format(relators_[k]) + " does not evaluate to the identity", relator_line(k));
        }
    }
}

GroupElement LatticePresentation::evaluate(const Word& w) const {
    GroupElement acc;
    for (const Letter& l : w.letters()) {
        if (l.exponent == 1) {
            acc = hyp2::compose(acc, generators_.at(l.generator).element);
        } else if (l.exponent == -1) {
            acc = hyp2::compose(acc, inverses_.at(l.generator));
        } else {
            acc = hyp2::compose(acc, hyp2::power(generators_.at(l.generator).element, l.exponent));
        }
    }
    return acc;
}

int LatticePresentation::index_of(std::string_view label) const {
    for (std::size_t k = 0; k < generators_.size(); ++k)
        if (generators_[k].label == label) return static_cast<int>(k);
    return -1;
}

Word LatticePresentation::parse_word(std::string_view text) const {
    Word out;
    std::size_t pos = 0;
    auto is_sep = [](char ch) { return std::isspace(static_cast<unsigned char>(ch)) != 0 || ch == '*'; };
    while (pos < text.size()) {
        while (pos < text.size() && is_sep(text[pos])) ++pos;
        if (pos >= text.size()) break;
        std::size_t end = pos;
        while (end < text.size() && !is_sep(text[end])) ++end;
        std::string_view token = text.substr(pos, end - pos);
        pos = end;

        long long exponent = 1;
        const auto caret = token.find('^');
        std::string_view label = token.substr(0, caret);
        if (caret != std::string_view::npos) {
            std::string_view exp_text = token.substr(caret + 1);
            if (!exp_text.empty() && exp_text.front() == '+') exp_text.remove_prefix(1);
            const auto* first = exp_text.data();
            const auto* last = exp_text.data() + exp_text.size();
            auto [ptr, ec] = std::from_chars(first, last, exponent);
            if (ec != std::errc() || ptr != last || exp_text.empty())
                throw Error(ErrorCode::InvalidPresentation, "bad exponent in word token '" + std::string(token) + "'");
        }
        const int gen = index_of(label);
        if (gen < 0) throw Error(ErrorCode::InvalidPresentation, "unknown generator '" + std::string(label) + "'");
        out.push_back({gen, exponent});
    }
    return out;
}

std::string LatticePresentation::format(const Word& w) const {
    if (w.empty()) return "1";
    std::ostringstream os;
    bool first = true;
    for (const Letter& l : w.letters()) {
        if (!first) os << ' ';
        first = false;
        os << generators_.at(l.generator).label;
        if (l.exponent != 1) os << '^' << l.exponent;
    }
    return os.str();
}

}  // namespace covwalk::fuchsian
