#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "enedina/harmony.hpp"

namespace enedina::bpe {

// Byte-level BPE sized to 8,000 merged tokens plus the 12 pinned special
// tokens (ids 8000..8011). The initial alphabet is the 256 single bytes, so
// any text is tokenizable. Merge selection is highest pair frequency with
// ties broken by the lexicographically smaller (left, right) byte pair,
// which makes training deterministic with no seed.

inline constexpr int kByteAlphabet = 256;
inline constexpr int kDefaultBpeTarget = 8000;
inline constexpr long kMaxSequenceTokens = 14336;

struct Vocabulary {
    std::vector<std::string> id_to_token;                      // bytes per id
    std::vector<std::pair<std::string, std::string>> merges;   // ordered
    std::map<std::pair<std::string, std::string>, int> merge_rank;
    std::unordered_map<std::string, int> token_to_id;
    int bpe_size = 0; // ids [0, bpe_size) are BPE; specials follow

    int size() const { return static_cast<int>(id_to_token.size()); }

    int special_id(harmony::Token t) const {
        return bpe_size + static_cast<int>(t);
    }

    void rebuild_index() {
        token_to_id.clear();
        merge_rank.clear();
        for (int i = 0; i < bpe_size; ++i) token_to_id.emplace(id_to_token[i], i);
        for (std::size_t r = 0; r < merges.size(); ++r)
            merge_rank.emplace(merges[r], static_cast<int>(r));
    }
};

namespace detail {

struct Node {
    int sym = -1;  // vocab id, -1 when dead
    int prev = -1;
    int next = -1;
};

struct PairStat {
    long count = 0;
    std::vector<int> positions; // node index of the left element (may go stale)
};

using Pair = std::pair<int, int>;

struct PairHash {
    std::size_t operator()(const Pair& p) const {
        return std::hash<long long>()((static_cast<long long>(p.first) << 32) ^
                                      static_cast<unsigned>(p.second));
    }
};

// Heap entry ordering: highest count first, then lexicographically smaller
// (left bytes, right bytes) pair. Entries are validated lazily against the
// live count on pop.
struct HeapEntry {
    long count;
    const std::string* left;
    const std::string* right;
    Pair pair;
};

struct HeapLess {
    bool operator()(const HeapEntry& a, const HeapEntry& b) const {
        if (a.count != b.count) return a.count < b.count;
        if (*a.left != *b.left) return *a.left > *b.left;
        return *a.right > *b.right;
    }
};

// Splits text into maximal special-free segments. Special-token occurrences
// act as hard boundaries and contribute nothing to pair statistics.
inline std::vector<std::string_view> special_free_segments(std::string_view text) {
    std::vector<std::string_view> segs;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto hit = harmony::find_special(text, pos);
        if (!hit) {
            segs.push_back(text.substr(pos));
            break;
        }
        if (hit->first > pos) segs.push_back(text.substr(pos, hit->first - pos));
        pos = hit->first + harmony::surface(hit->second).size();
    }
    return segs;
}

} // namespace detail

// Trains a byte-level BPE vocabulary on the given texts until `target_bpe`
// tokens (256 byte symbols + merges) exist. Pairs must occur at least twice
// to merge; running out before the target is an error reporting the
// achievable vocabulary size.
inline Vocabulary train_bpe(const std::vector<std::string>& corpus, int target_bpe = kDefaultBpeTarget) {
    require(target_bpe >= kByteAlphabet, "train_bpe: target below byte alphabet");
    bool any = false;
    for (const auto& t : corpus) any = any || !t.empty();
    require(any, "train_bpe: corpus is empty");

    Vocabulary vocab;
    vocab.bpe_size = target_bpe;
    vocab.id_to_token.reserve(static_cast<std::size_t>(target_bpe) + harmony::kSpecialCount);
    for (int b = 0; b < kByteAlphabet; ++b)
        vocab.id_to_token.push_back(std::string(1, static_cast<char>(b)));

    // Build the linked corpus, one chain per special-free segment.
    std::vector<detail::Node> nodes;
    {
        std::size_t total = 0;
        for (const auto& t : corpus) total += t.size();
        nodes.reserve(total);
    }
    std::unordered_map<detail::Pair, detail::PairStat, detail::PairHash> stats;
    for (const auto& text : corpus) {
        for (std::string_view seg : detail::special_free_segments(text)) {
            const int base = static_cast<int>(nodes.size());
            for (std::size_t i = 0; i < seg.size(); ++i) {
                detail::Node n;
                n.sym = static_cast<unsigned char>(seg[i]);
                n.prev = i == 0 ? -1 : base + static_cast<int>(i) - 1;
                n.next = i + 1 == seg.size() ? -1 : base + static_cast<int>(i) + 1;
                nodes.push_back(n);
            }
            for (std::size_t i = 0; i + 1 < seg.size(); ++i) {
                const detail::Pair p{static_cast<unsigned char>(seg[i]),
                                     static_cast<unsigned char>(seg[i + 1])};
                auto& st = stats[p];
                st.count += 1;
                st.positions.push_back(base + static_cast<int>(i));
            }
        }
    }

    std::priority_queue<detail::HeapEntry, std::vector<detail::HeapEntry>, detail::HeapLess> heap;
    auto push_pair = [&](const detail::Pair& p, long count) {
        if (count < 2) return;
        heap.push({count, &vocab.id_to_token[p.first], &vocab.id_to_token[p.second], p});
    };
    for (const auto& [p, st] : stats) push_pair(p, st.count);

    auto bump = [&](const detail::Pair& p, int left_node, long delta) {
        auto& st = stats[p];
        st.count += delta;
        if (delta > 0) {
            st.positions.push_back(left_node);
            push_pair(p, st.count);
        }
    };

    while (vocab.size() < target_bpe) {
        detail::Pair best{-1, -1};
        long best_count = 0;
        while (!heap.empty()) {
            const detail::HeapEntry top = heap.top();
            auto it = stats.find(top.pair);
            const long live = it == stats.end() ? 0 : it->second.count;
            if (live != top.count || live < 2) {
                heap.pop();
                continue;
            }
            best = top.pair;
            best_count = live;
            break;
        }
        if (best.first < 0)
            throw std::invalid_argument(
                "train_bpe: corpus too small to reach target; achievable vocabulary = " +
                std::to_string(vocab.size()));

        const std::string merged = vocab.id_to_token[best.first] + vocab.id_to_token[best.second];
        // Specials are never produced by merges.
        bool is_special_surface = false;
        for (const auto s : harmony::special_surfaces())
            if (merged == s) is_special_surface = true;
        if (is_special_surface) {
            heap.pop();
            stats.erase(best);
            continue;
        }

        const int new_sym = vocab.size();
        vocab.id_to_token.push_back(merged);
        vocab.merges.emplace_back(vocab.id_to_token[best.first], vocab.id_to_token[best.second]);

        auto st_it = stats.find(best);
        std::vector<int> positions = std::move(st_it->second.positions);
        std::sort(positions.begin(), positions.end());
        stats.erase(st_it);

        for (int at : positions) {
            detail::Node& ln = nodes[at];
            if (ln.sym != best.first || ln.next < 0) continue;
            detail::Node& rn = nodes[ln.next];
            if (rn.sym != best.second) continue;

            const int before = ln.prev;
            const int after = rn.next;
            if (before >= 0) bump({nodes[before].sym, best.first}, before, -1);
            if (after >= 0) bump({best.second, nodes[after].sym}, ln.next, -1);

            rn.sym = -1;
            ln.sym = new_sym;
            ln.next = after;
            if (after >= 0) nodes[after].prev = at;

            if (before >= 0) bump({nodes[before].sym, new_sym}, before, +1);
            if (after >= 0) bump({new_sym, nodes[after].sym}, at, +1);
        }
    }

    for (const auto s : harmony::special_surfaces()) vocab.id_to_token.emplace_back(s);
    vocab.rebuild_index();
    return vocab;
}

namespace detail {

struct EncodeCandidate {
    int rank;
    int pos; // node index of the left element
};

struct EncodeLess {
    bool operator()(const EncodeCandidate& a, const EncodeCandidate& b) const {
        if (a.rank != b.rank) return a.rank > b.rank; // lowest rank first
        return a.pos > b.pos;                          // then leftmost
    }
};

// Applies merges to one special-free segment by repeatedly contracting the
// present pair with the lowest merge rank (leftmost on ties).
inline void encode_segment(const Vocabulary& v, std::string_view seg, std::vector<int>& out) {
    const std::size_t n = seg.size();
    if (n == 0) return;
    std::vector<Node> nodes(n);
    for (std::size_t i = 0; i < n; ++i) {
        nodes[i].sym = static_cast<unsigned char>(seg[i]);
        nodes[i].prev = i == 0 ? -1 : static_cast<int>(i) - 1;
        nodes[i].next = i + 1 == n ? -1 : static_cast<int>(i) + 1;
    }
    std::priority_queue<EncodeCandidate, std::vector<EncodeCandidate>, EncodeLess> heap;
    auto consider = [&](int at) {
        if (at < 0) return;
        const Node& ln = nodes[at];
        if (ln.sym < 0 || ln.next < 0) return;
        const auto it = v.merge_rank.find(
            {v.id_to_token[ln.sym], v.id_to_token[nodes[ln.next].sym]});
        if (it != v.merge_rank.end()) heap.push({it->second, at});
    };
    for (std::size_t i = 0; i + 1 < n; ++i) consider(static_cast<int>(i));
    while (!heap.empty()) {
        const auto [rank, at] = heap.top();
        heap.pop();
        Node& ln = nodes[at];
        if (ln.sym < 0 || ln.next < 0) continue;
        Node& rn = nodes[ln.next];
        const auto it = v.merge_rank.find({v.id_to_token[ln.sym], v.id_to_token[rn.sym]});
        if (it == v.merge_rank.end() || it->second != rank) continue; // stale
        ln.sym = kByteAlphabet + rank;
        rn.sym = -1;
        ln.next = rn.next;
        if (ln.next >= 0) nodes[ln.next].prev = at;
        consider(ln.prev);
        consider(at);
    }
    for (int at = 0; at >= 0; at = nodes[at].next)
        if (nodes[at].sym >= 0) out.push_back(nodes[at].sym);
}

} // namespace detail

// Special-token occurrences map atomically to their pinned ids; everything
// between them goes through the merge table.
inline std::vector<int> encode(const Vocabulary& v, std::string_view text) {
    require(v.size() > 0, "encode: vocabulary not loaded");
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto hit = harmony::find_special(text, pos);
        const std::size_t seg_end = hit ? hit->first : text.size();
        if (seg_end > pos) detail::encode_segment(v, text.substr(pos, seg_end - pos), out);
        if (!hit) break;
        out.push_back(v.special_id(hit->second));
        pos = hit->first + harmony::surface(hit->second).size();
    }
    return out;
}

inline std::string decode(const Vocabulary& v, std::span<const int> ids) {
    std::string out;
    for (int id : ids) {
        require(id >= 0 && id < v.size(), "decode: unknown token id " + std::to_string(id));
        out += v.id_to_token[static_cast<std::size_t>(id)];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Persistence: merges list + specials manifest
// ---------------------------------------------------------------------------

namespace detail {

// Byte <-> printable codepoint bijection (the GPT-2 convention) so merges
// serialize as readable UTF-8 lines.
inline const std::array<std::string, 256>& byte_to_unicode() {
    static const std::array<std::string, 256> table = [] {
        std::array<std::string, 256> t;
        auto encode_cp = [](int cp) {
            std::string s;
            if (cp < 0x80) {
                s += static_cast<char>(cp);
            } else if (cp < 0x800) {
                s += static_cast<char>(0xC0 | (cp >> 6));
                s += static_cast<char>(0x80 | (cp & 0x3F));
            } else {
                s += static_cast<char>(0xE0 | (cp >> 12));
                s += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
                s += static_cast<char>(0x80 | (cp & 0x3F));
            }
            return s;
        };
        auto printable = [](int b) {
            return (b >= '!' && b <= '~') || (b >= 0xA1 && b <= 0xAC) || (b >= 0xAE && b <= 0xFF);
        };
        int shift = 0;
        for (int b = 0; b < 256; ++b) {
            if (printable(b))
                t[b] = encode_cp(b);
            else
                t[b] = encode_cp(256 + shift++);
        }
        return t;
    }();
    return table;
}

inline std::string bytes_to_printable(std::string_view bytes) {
    std::string out;
    for (unsigned char c : bytes) out += byte_to_unicode()[c];
    return out;
}

inline std::string printable_to_bytes(std::string_view printable) {
    static const std::map<std::string, unsigned char> inverse = [] {
        std::map<std::string, unsigned char> m;
        for (int b = 0; b < 256; ++b) m[byte_to_unicode()[b]] = static_cast<unsigned char>(b);
        return m;
    }();
    std::string out;
    std::size_t i = 0;
    while (i < printable.size()) {
        const unsigned char lead = printable[i];
        std::size_t len = 1;
        if (lead >= 0xE0) len = 3;
        else if (lead >= 0xC0) len = 2;
        const auto it = inverse.find(std::string(printable.substr(i, len)));
        require(it != inverse.end(), "vocabulary: invalid printable byte encoding");
        out += static_cast<char>(it->second);
        i += len;
    }
    return out;
}

} // namespace detail

inline void save_vocabulary(const Vocabulary& v, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "merges.txt", std::ios::binary);
        require(out.good(), "save_vocabulary: cannot write merges.txt");
        out << "#version: enedina-bpe-1\n";
        for (const auto& [l, r] : v.merges)
            out << detail::bytes_to_printable(l) << ' ' << detail::bytes_to_printable(r) << '\n';
    }
    {
        njson specials = njson::array();
        for (const auto& [tok, nm] : harmony::special_names())
            specials.push_back(njson{{"name", nm},
                                     {"surface", std::string(harmony::surface(tok))},
                                     {"id", v.special_id(tok)}});
        njson j{{"schema_version", 1},
                {"byte_level", true},
                {"bpe_size", v.bpe_size},
                {"vocab_size", v.size()},
                {"max_sequence_tokens", kMaxSequenceTokens},
                {"specials", specials}};
        std::ofstream out(dir / "specials.json", std::ios::binary);
        require(out.good(), "save_vocabulary: cannot write specials.json");
        out << j.dump(2) << '\n';
    }
}

inline Vocabulary load_vocabulary(const std::filesystem::path& dir) {
    std::ifstream ms(dir / "merges.txt", std::ios::binary);
    require(ms.good(), "load_vocabulary: cannot read merges.txt");
    std::ifstream sj(dir / "specials.json", std::ios::binary);
    require(sj.good(), "load_vocabulary: cannot read specials.json");
    njson meta = njson::parse(sj);
    require(meta.at("schema_version").get<int>() == 1,
            "load_vocabulary: unsupported schema_version");

    Vocabulary v;
    v.bpe_size = meta.at("bpe_size").get<int>();
    for (int b = 0; b < kByteAlphabet; ++b)
        v.id_to_token.push_back(std::string(1, static_cast<char>(b)));

    std::string line;
    std::getline(ms, line); // header
    require(line.rfind("#version:", 0) == 0, "load_vocabulary: missing merges header");
    while (std::getline(ms, line)) {
        if (line.empty()) continue;
        const std::size_t sp = line.find(' ');
        require(sp != std::string::npos, "load_vocabulary: malformed merges line");
        const std::string l = detail::printable_to_bytes(std::string_view(line).substr(0, sp));
        const std::string r = detail::printable_to_bytes(std::string_view(line).substr(sp + 1));
        v.merges.emplace_back(l, r);
        v.id_to_token.push_back(l + r);
    }
    require(v.size() == v.bpe_size, "load_vocabulary: merges do not match bpe_size");
    for (const auto s : harmony::special_surfaces()) v.id_to_token.emplace_back(s);
    v.rebuild_index();
    return v;
}

// FNV-1a over the merges list; recorded in manifests.
inline std::uint64_t merges_hash(const Vocabulary& v) {
    std::uint64_t h = fnv1a("enedina-bpe-1");
    for (const auto& [l, r] : v.merges) {
        h = fnv1a(l, h);
        h = fnv1a("\x01", h);
        h = fnv1a(r, h);
        h = fnv1a("\x02", h);
    }
    return h;
}

} // namespace enedina::bpe
