#ifndef LAWNAV_EPISODE_HPP
#define LAWNAV_EPISODE_HPP

#include "refpath.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lawnav
{

/// Landmark ids are in [0, kMaxLandmarks).
inline constexpr int kMaxLandmarks = 8;

enum class TokenKind : std::uint8_t
{
    GoForward,
    TurnLeft,
    TurnRight,
    TurnAround,
    Stop,
    PassLandmark,
    StopAt,
};

/// Symbolic instruction token; landmark is only meaningful for PassLandmark/StopAt.
struct Token
{
    TokenKind kind = TokenKind::Stop;
    int landmark = -1;

    friend bool operator==(const Token&, const Token&) = default;

    std::string str() const
    {
        switch (kind) {
        case TokenKind::GoForward: return "GO_FORWARD";
        case TokenKind::TurnLeft: return "TURN_LEFT";
        case TokenKind::TurnRight: return "TURN_RIGHT";
        case TokenKind::TurnAround: return "TURN_AROUND";
        case TokenKind::Stop: return "STOP";
        case TokenKind::PassLandmark: return "PASS_LANDMARK_" + std::to_string(landmark);
        case TokenKind::StopAt: return "STOP_AT_" + std::to_string(landmark);
        }
        return "?";
    }

    static std::optional<Token> parse(const std::string& s)
    {
        if (s == "GO_FORWARD") return Token{TokenKind::GoForward};
        if (s == "TURN_LEFT") return Token{TokenKind::TurnLeft};
        if (s == "TURN_RIGHT") return Token{TokenKind::TurnRight};
        if (s == "TURN_AROUND") return Token{TokenKind::TurnAround};
        if (s == "STOP") return Token{TokenKind::Stop};
        auto landmark = [&](std::string_view prefix) -> std::optional<int> {
            if (s.rfind(prefix, 0) != 0 || s.size() == prefix.size()) return std::nullopt;
            int v = 0;
            for (char c : s.substr(prefix.size())) {
                if (c < '0' || c > '9') return std::nullopt;
                v = v * 10 + (c - '0');
                if (v >= kMaxLandmarks) return std::nullopt;
            }
            return v;
        };
        if (auto id = landmark("PASS_LANDMARK_")) return Token{TokenKind::PassLandmark, *id};
        if (auto id = landmark("STOP_AT_")) return Token{TokenKind::StopAt, *id};
        return std::nullopt;
    }

    /// Dense vocabulary id used by the policy embedding table.
    int id() const noexcept
    {
        switch (kind) {
        case TokenKind::PassLandmark: return 5 + landmark;
        case TokenKind::StopAt: return 5 + kMaxLandmarks + landmark;
        default: return static_cast<int>(kind);
        }
    }
};

inline constexpr int kVocabularySize = 5 + 2 * kMaxLandmarks;

/// Contiguous token span [token_begin, token_end) describing pano waypoints
/// pano_from..pano_to (inclusive).
struct SubInstruction
{
    std::size_t token_begin = 0;
    std::size_t token_end = 0;
    std::size_t pano_from = 0;
    std::size_t pano_to = 0;

    friend bool operator==(const SubInstruction&, const SubInstruction&) = default;
};

struct Episode
{
    std::string id;
    std::string map_id;
    std::string split; // train | val_seen | val_unseen
    Pose start;
    Point goal;
    WaypointPath pano{{}, PathKind::pano()};
    std::vector<Token> instruction;
    std::vector<SubInstruction> sub_instructions;
    double divergence = 1.0;

    friend bool operator==(const Episode&, const Episode&) = default;
};

/// Checks the structural episode invariants; returns an empty string when valid.
inline std::string episode_problem(const Episode& ep)
{
    if (ep.pano.size() < 2) return "pano path needs at least two points";
    if (!(ep.pano.front() == ep.start.position())) return "pano path must start at the start position";
    if (!(ep.pano.back() == ep.goal)) return "pano path must end at the goal";
    if (ep.sub_instructions.empty()) return "missing sub-instructions";
    std::size_t tok = 0, pano = 0;
    for (const auto& s : ep.sub_instructions) {
        if (s.token_begin != tok || s.token_end <= s.token_begin) return "sub-instruction token spans not contiguous";
        if (s.pano_from != pano || s.pano_to < s.pano_from) return "sub-instruction pano spans not contiguous";
        tok = s.token_end;
        pano = s.pano_to;
    }
    if (tok != ep.instruction.size()) return "sub-instructions do not cover the instruction";
    if (pano != ep.pano.size() - 1) return "sub-instructions do not cover the pano path";
    return {};
}

} // namespace lawnav

#endif // LAWNAV_EPISODE_HPP
