#include "scenegen/error.hpp"
#include "scenegen/evolve/evolve.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>

namespace scenegen::evolve {

namespace {

std::vector<std::string> words_of(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '.' || c == '-') {
            current += static_cast<char>(std::tolower(c));
        } else if (!current.empty()) {
            words.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    // Sentence-final periods are punctuation, decimal points are not.
    for (auto& w : words) {
        while (!w.empty() && (w.back() == '.' || w.back() == '-')) {
            w.pop_back();
        }
    }
    std::erase_if(words, [](const std::string& w) { return w.empty(); });
    return words;
}

std::set<std::string> shingle_strings(std::string_view text, std::size_t k) {
    const auto words = words_of(text);
    std::set<std::string> out;
    if (words.empty()) {
        return out;
    }
    if (words.size() < k) {
        std::string all;
        for (const auto& w : words) {
            all += (all.empty() ? "" : " ") + w;
        }
        out.insert(all);
        return out;
    }
    for (std::size_t i = 0; i + k <= words.size(); ++i) {
        std::string s = words[i];
        for (std::size_t j = 1; j < k; ++j) {
            s += ' ' + words[i + j];
        }
        out.insert(std::move(s));
    }
    return out;
}

} // namespace

std::vector<std::uint64_t> shingles(std::string_view text, std::size_t k) {
    if (k == 0) {
        throw PreconditionError("shingle size must be positive");
    }
    std::vector<std::uint64_t> out;
    for (const auto& s : shingle_strings(text, k)) {
        out.push_back(fnv1a64(s));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Slot values are drawn without replacement across slots for each shingle
// (Ertl's SuperMinHash), which keeps the per-slot collision probability at
// the Jaccard index while lowering the estimator variance for small sets.
MinHashSignature minhash(std::string_view text, const MinHashParams& params) {
    if (params.num_perms == 0) {
        throw PreconditionError("MinHash needs at least one permutation");
    }
    const std::size_t m = params.num_perms;
    constexpr std::uint64_t kFraction = 1ULL << 53;
    const std::uint64_t empty = std::numeric_limits<std::uint64_t>::max();

    MinHashSignature sig;
    sig.params = params;
    sig.hashes.assign(m, empty);

    std::vector<std::size_t> perm(m);
    std::vector<std::size_t> owner(m, std::numeric_limits<std::size_t>::max());
    std::vector<std::size_t> histogram(m, 0);
    histogram[m - 1] = m;
    std::size_t active = m - 1;

    const auto sh = shingles(text, params.shingle_size);
    for (std::size_t i = 0; i < sh.size(); ++i) {
        std::uint64_t state = sh[i];
        auto next = [&state] {
            state += 0x9e3779b97f4a7c15ULL;
            return mix64(state);
        };
        for (std::size_t j = 0; j <= active; ++j) {
            const std::uint64_t r = next() >> 11;
            const std::size_t k = j + static_cast<std::size_t>(next() % (m - j));
            if (owner[j] != i) {
                owner[j] = i;
                perm[j] = j;
            }
            if (owner[k] != i) {
                owner[k] = i;
                perm[k] = k;
            }
            std::swap(perm[j], perm[k]);
            const std::uint64_t value = static_cast<std::uint64_t>(j) * kFraction + r;
            auto& slot = sig.hashes[perm[j]];
            if (value < slot) {
                const std::size_t previous = slot == empty ? m - 1 : std::min<std::size_t>(slot / kFraction, m - 1);
                slot = value;
                if (j < previous) {
                    --histogram[previous];
                    ++histogram[j];
                    while (active > 0 && histogram[active] == 0) {
                        --active;
                    }
                }
            }
        }
    }
    return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
    if (a.hashes.size() != b.hashes.size() || a.params.shingle_size != b.params.shingle_size ||
        a.hashes.empty()) {
        throw PreconditionError("MinHash signatures have different parameters");
    }
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.hashes.size(); ++i) {
        same += a.hashes[i] == b.hashes[i] ? 1 : 0;
    }
    return static_cast<double>(same) / static_cast<double>(a.hashes.size());
}

double exact_jaccard(std::string_view a, std::string_view b, std::size_t k) {
    const auto sa = shingle_strings(a, k);
    const auto sb = shingle_strings(b, k);
    if (sa.empty() && sb.empty()) {
        return 1.0;
    }
    std::size_t inter = 0;
    for (const auto& s : sa) {
        inter += sb.contains(s) ? 1 : 0;
    }
    const std::size_t uni = sa.size() + sb.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

bool is_duplicate(const MinHashSignature& candidate, const std::vector<DescriptionRecord>& pool, double threshold) {
    for (const auto& r : pool) {
        if (estimate_jaccard(candidate, r.signature) >= threshold) {
            return true;
        }
    }
    return false;
}

} // namespace scenegen::evolve
