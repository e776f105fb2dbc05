#pragma once

#include <array>
#include <charconv>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "enedina/record.hpp"
#include "enedina/templates.hpp"

namespace enedina::harmony {

// The structured response format: one prompt block and five channels
// (analysis, reasoning, code, verification, result) delimited by 12 special
// tokens, terminated by STOP + EOS. The grammar is strict; anything not
// produced by render is rejected with a positioned error.

enum class Token {
    Bos,
    Eos,
    Pad,
    PromptStart,
    PromptEnd,
    ChAnalysis,
    ChReasoning,
    ChCode,
    ChVerification,
    ChResult,
    ChEnd,
    Stop
};

inline constexpr int kSpecialCount = 12;

// Pinned vocabulary ids 8000..8011 in this order.
inline const std::array<std::pair<Token, const char*>, kSpecialCount>& special_names() {
    static const std::array<std::pair<Token, const char*>, kSpecialCount> names = {{
        {Token::Bos, "BOS"},
        {Token::Eos, "EOS"},
        {Token::Pad, "PAD"},
        {Token::PromptStart, "PROMPT_START"},
        {Token::PromptEnd, "PROMPT_END"},
        {Token::ChAnalysis, "CH_ANALYSIS"},
        {Token::ChReasoning, "CH_REASONING"},
        {Token::ChCode, "CH_CODE"},
        {Token::ChVerification, "CH_VERIFICATION"},
        {Token::ChResult, "CH_RESULT"},
        {Token::ChEnd, "CH_END"},
        {Token::Stop, "STOP"},
    }};
    return names;
}

inline const std::array<std::string_view, kSpecialCount>& special_surfaces() {
    static const std::array<std::string_view, kSpecialCount> surfaces = {
        "<|bos|>",       "<|eos|>",    "<|pad|>",          "<|prompt_start|>",
        "<|prompt_end|>", "<|analysis|>", "<|reasoning|>", "<|code|>",
        "<|verification|>", "<|result|>", "<|ch_end|>",    "<|stop|>"};
    return surfaces;
}

inline std::string_view surface(Token t) {
    return special_surfaces()[static_cast<int>(t)];
}

inline const char* name(Token t) { return special_names()[static_cast<int>(t)].second; }

inline constexpr int kSpecialIdBase = 8000;

inline int pinned_id(Token t) { return kSpecialIdBase + static_cast<int>(t); }

inline constexpr std::array<Token, 5> kChannelOrder = {
    Token::ChAnalysis, Token::ChReasoning, Token::ChCode, Token::ChVerification,
    Token::ChResult};

inline bool is_channel(Token t, int* index = nullptr) {
    for (int i = 0; i < 5; ++i) {
        if (kChannelOrder[i] == t) {
            if (index) *index = i;
            return true;
        }
    }
    return false;
}

// First special-token occurrence at or after `from`. A "<|" that matches no
// surface is ordinary body text.
inline std::optional<std::pair<std::size_t, Token>> find_special(std::string_view text,
                                                                 std::size_t from) {
    while (true) {
        const std::size_t at = text.find("<|", from);
        if (at == std::string_view::npos) return std::nullopt;
        for (int i = 0; i < kSpecialCount; ++i) {
            const std::string_view s = special_surfaces()[i];
            if (text.compare(at, s.size(), s) == 0)
                return std::make_pair(at, static_cast<Token>(i));
        }
        from = at + 1;
    }
}

inline bool contains_special(std::string_view text) {
    return find_special(text, 0).has_value();
}

// ---------------------------------------------------------------------------
// Document
// ---------------------------------------------------------------------------

struct HarmonyDoc {
    std::string prompt;
    std::array<std::string, 5> channels; // canonical order
    bool stopped = true;

    const std::string& analysis() const { return channels[0]; }
    const std::string& reasoning() const { return channels[1]; }
    const std::string& code() const { return channels[2]; }
    const std::string& verification() const { return channels[3]; }
    const std::string& result() const { return channels[4]; }

    bool operator==(const HarmonyDoc&) const = default;
};

// ---------------------------------------------------------------------------
// Render
// ---------------------------------------------------------------------------

// Byte-exact layout (grammar in docs/format.md):
//   BOS PROMPT_START prompt PROMPT_END \n
//   { CH_i \n body \n CH_END \n } x5
//   STOP EOS
inline std::string render_doc(const HarmonyDoc& doc) {
    require(!doc.prompt.empty(), "render: prompt must be non-empty");
    require(!contains_special(doc.prompt), "render: prompt embeds a special token");
    for (const auto& body : doc.channels)
        require(!contains_special(body), "render: channel body embeds a special token");
    std::string out;
    out += surface(Token::Bos);
    out += surface(Token::PromptStart);
    out += doc.prompt;
    out += surface(Token::PromptEnd);
    out += '\n';
    for (int i = 0; i < 5; ++i) {
        out += surface(kChannelOrder[i]);
        out += '\n';
        out += doc.channels[i];
        out += '\n';
        out += surface(Token::ChEnd);
        out += '\n';
    }
    out += surface(Token::Stop);
    out += surface(Token::Eos);
    return out;
}

// Composes the channel bodies for a verified record and renders them.
// Refuses records that did not pass verification.
inline HarmonyDoc compose(const DatasetRecord& rec) {
    if (!rec.verification.overall)
        throw std::invalid_argument("render: record failed verification; refusing to render");
    const StressReport* stress = rec.stress ? &*rec.stress : nullptr;
    const FatigueReport* fatigue = rec.fatigue ? &*rec.fatigue : nullptr;
    HarmonyDoc doc;
    doc.prompt = build_prompt(rec.spec, rec.level, rec.options, rec.locale);
    doc.channels[0] = analysis_body(rec.spec, rec.level, rec.locale);
    doc.channels[1] =
        reasoning_body(rec.spec, rec.level, rec.summary, stress, fatigue, rec.locale);
    doc.channels[2] = code_body(rec.spec, rec.level, rec.options, rec.summary.n_grid);
    doc.channels[3] = verification_body(rec.verification);
    doc.channels[4] =
        result_body(rec.level, rec.spec.has_torque(), rec.summary, stress, fatigue);
    doc.stopped = true;
    return doc;
}

inline std::string render(const DatasetRecord& rec) { return render_doc(compose(rec)); }

// ---------------------------------------------------------------------------
// Parse
// ---------------------------------------------------------------------------

struct ParseError {
    enum class Kind { Malformed, UnexpectedEnd, DuplicateChannel, OrderViolation };
    Kind kind = Kind::Malformed;
    std::size_t offset = 0;
    std::string expected;
    std::string found;

    std::string message() const {
        const char* k = "malformed";
        switch (kind) {
            case Kind::Malformed: k = "malformed"; break;
            case Kind::UnexpectedEnd: k = "unexpected end of input"; break;
            case Kind::DuplicateChannel: k = "duplicate channel"; break;
            case Kind::OrderViolation: k = "channel order violation"; break;
        }
        return std::string(k) + " at byte " + std::to_string(offset) + ": expected " + expected +
               ", found " + found;
    }
};

using ParseResult = std::variant<HarmonyDoc, ParseError>;

namespace detail {

inline std::string snippet(std::string_view text, std::size_t at, std::size_t len = 16) {
    if (at >= text.size()) return "<end>";
    std::string s(text.substr(at, std::min(len, text.size() - at)));
    for (char& c : s)
        if (c == '\n') c = ' ';
    return "\"" + s + "\"";
}

} // namespace detail

inline ParseResult parse(std::string_view text) {
    using Kind = ParseError::Kind;
    std::size_t pos = 0;

    auto fail = [&](Kind kind, std::string expected, std::string found) {
        return ParseError{kind, pos, std::move(expected), std::move(found)};
    };
    auto expect_literal = [&](std::string_view lit,
                              const std::string& what) -> std::optional<ParseError> {
        if (pos >= text.size())
            return fail(Kind::UnexpectedEnd, what, "<end>");
        if (text.compare(pos, lit.size(), lit) != 0)
            return fail(Kind::Malformed, what, detail::snippet(text, pos));
        pos += lit.size();
        return std::nullopt;
    };

    HarmonyDoc doc;

    if (auto e = expect_literal(surface(Token::Bos), std::string(surface(Token::Bos)))) return *e;
    if (auto e = expect_literal(surface(Token::PromptStart),
                                std::string(surface(Token::PromptStart))))
        return *e;

    auto next = find_special(text, pos);
    if (!next) return fail(Kind::UnexpectedEnd, std::string(surface(Token::PromptEnd)), "<end>");
    if (next->second != Token::PromptEnd) {
        pos = next->first;
        return fail(Kind::Malformed, std::string(surface(Token::PromptEnd)),
                    std::string(surface(next->second)));
    }
    if (next->first == pos) return fail(Kind::Malformed, "non-empty prompt",
                                        std::string(surface(Token::PromptEnd)));
    doc.prompt = std::string(text.substr(pos, next->first - pos));
    pos = next->first + surface(Token::PromptEnd).size();
    if (auto e = expect_literal("\n", "newline after prompt block")) return *e;

    for (int k = 0; k < 5; ++k) {
        const Token want = kChannelOrder[k];
        if (pos >= text.size())
            return fail(Kind::UnexpectedEnd, std::string(surface(want)), "<end>");
        auto here = find_special(text, pos);
        if (!here || here->first != pos) {
            // Stray bytes where a channel token must start.
            return fail(Kind::Malformed, std::string(surface(want)),
                        detail::snippet(text, pos));
        }
        if (here->second != want) {
            int got_index = -1;
            if (is_channel(here->second, &got_index)) {
                if (got_index < k)
                    return fail(Kind::DuplicateChannel, std::string(surface(want)),
                                std::string(surface(here->second)));
                return fail(Kind::OrderViolation, std::string(surface(want)),
                            std::string(surface(here->second)));
            }
            return fail(Kind::Malformed, std::string(surface(want)),
                        std::string(surface(here->second)));
        }
        pos += surface(want).size();
        if (auto e = expect_literal("\n", "newline after channel token")) return *e;
        auto endtok = find_special(text, pos);
        if (!endtok)
            return fail(Kind::UnexpectedEnd, std::string(surface(Token::ChEnd)), "<end>");
        if (endtok->second != Token::ChEnd) {
            pos = endtok->first;
            return fail(Kind::Malformed, std::string(surface(Token::ChEnd)),
                        std::string(surface(endtok->second)));
        }
        const std::string_view raw = text.substr(pos, endtok->first - pos);
        if (raw.empty() || raw.back() != '\n') {
            pos = endtok->first;
            return fail(Kind::Malformed, "newline before " + std::string(surface(Token::ChEnd)),
                        detail::snippet(text, pos));
        }
        doc.channels[k] = std::string(raw.substr(0, raw.size() - 1));
        pos = endtok->first + surface(Token::ChEnd).size();
        if (auto e = expect_literal("\n", "newline after channel end")) return *e;
    }

    if (pos >= text.size())
        return fail(Kind::UnexpectedEnd, std::string(surface(Token::Stop)), "<end>");
    auto tail = find_special(text, pos);
    if (!tail || tail->first != pos)
        return fail(Kind::Malformed, std::string(surface(Token::Stop)),
                    detail::snippet(text, pos));
    if (tail->second != Token::Stop) {
        if (is_channel(tail->second))
            return fail(Kind::DuplicateChannel, std::string(surface(Token::Stop)),
                        std::string(surface(tail->second)));
        return fail(Kind::Malformed, std::string(surface(Token::Stop)),
                    std::string(surface(tail->second)));
    }
    pos += surface(Token::Stop).size();
    if (auto e = expect_literal(surface(Token::Eos), std::string(surface(Token::Eos)))) return *e;
    if (pos != text.size())
        return fail(Kind::Malformed, "end of input", detail::snippet(text, pos));
    doc.stopped = true;
    return doc;
}

// ---------------------------------------------------------------------------
// Quantity extraction
// ---------------------------------------------------------------------------

struct Quantity {
    double value = 0.0;
    std::string unit;
};

struct ExtractionError {
    std::vector<std::string> offending_lines;
    std::string message;
};

using ExtractResult = std::variant<std::map<std::string, Quantity>, ExtractionError>;

// Parses result-channel lines of the form "label = value[ unit]" against the
// fixed quantity registry. Any unknown label, unit mismatch, or unparseable
// numeral is an extraction error listing the offending lines.
inline ExtractResult extract_quantities(const HarmonyDoc& doc) {
    std::map<std::string, Quantity> out;
    ExtractionError err;
    std::string_view body = doc.result();
    std::size_t start = 0;
    while (start <= body.size()) {
        const std::size_t nl = body.find('\n', start);
        const std::string_view line =
            body.substr(start, nl == std::string_view::npos ? body.size() - start : nl - start);
        start = nl == std::string_view::npos ? body.size() + 1 : nl + 1;
        if (line.empty()) {
            if (!body.empty()) err.offending_lines.push_back("<blank line>");
            continue;
        }
        const std::size_t sep = line.find(" = ");
        if (sep == std::string_view::npos) {
            err.offending_lines.push_back(std::string(line));
            continue;
        }
        const std::string label(line.substr(0, sep));
        std::string_view rest = line.substr(sep + 3);
        std::string_view num_sv = rest;
        std::string unit;
        const std::size_t sp = rest.find(' ');
        if (sp != std::string_view::npos) {
            num_sv = rest.substr(0, sp);
            unit = std::string(rest.substr(sp + 1));
            if (unit.empty() || unit.find(' ') != std::string::npos) {
                err.offending_lines.push_back(std::string(line));
                continue;
            }
        }
        double value = 0.0;
        const auto [ptr, ec] =
            std::from_chars(num_sv.data(), num_sv.data() + num_sv.size(), value);
        if (ec != std::errc{} || ptr != num_sv.data() + num_sv.size()) {
            err.offending_lines.push_back(std::string(line));
            continue;
        }
        const QuantityInfo* info = quantity_info(label);
        if (info == nullptr || unit != info->unit || out.count(label) != 0) {
            err.offending_lines.push_back(std::string(line));
            continue;
        }
        out.emplace(label, Quantity{value, unit});
    }
    if (!err.offending_lines.empty()) {
        err.message = std::to_string(err.offending_lines.size()) +
                      " result line(s) failed extraction";
        return err;
    }
    return out;
}

} // namespace enedina::harmony
