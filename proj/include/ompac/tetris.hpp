#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ompac/environment.hpp"
#include "ompac/random.hpp"

namespace ompac::tetris {

enum class Piece : std::uint8_t { kS, kZ, kO, kI, kJ, kL, kT };

inline constexpr std::array<Piece, 7> kAllPieces = {Piece::kS, Piece::kZ, Piece::kO, Piece::kI,
                                                    Piece::kJ, Piece::kL, Piece::kT};
inline constexpr std::array<Piece, 2> kSZPieces = {Piece::kS, Piece::kZ};

char to_char(Piece p) noexcept;
Piece piece_from_char(char c);

struct Cell {
  int x;
  int y;  // 0 is the bottom row of the footprint
};

using Footprint = std::array<Cell, 4>;

// Distinct orientations of a piece: 2 for S, Z and I, 1 for O, 4 for J, L and T.
std::span<const Footprint> rotations(Piece p) noexcept;
int footprint_width(const Footprint& f) noexcept;

// Occupancy grid; row 0 is the bottom. Widths up to 16 columns.
class Board {
 public:
  Board() = default;
  Board(int width, int height);

  // Rows given top to bottom, '#' occupied and anything else empty.
  static Board from_rows(const std::vector<std::string>& rows_top_down);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  bool occupied(int x, int y) const noexcept { return (rows_[y] >> x) & 1U; }
  void set(int x, int y, bool value);

  int column_height(int x) const noexcept;
  std::vector<int> column_heights() const;
  // Empty cells with at least one occupied cell above them in the same column.
  int holes() const noexcept;
  int occupied_count() const noexcept;

  // Removes full rows, shifting the rows above down. Returns the count.
  int clear_full_rows();

  std::string render() const;

  friend bool operator==(const Board&, const Board&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::uint16_t full_mask_ = 0;
  std::vector<std::uint16_t> rows_;
};

struct Placement {
  Piece piece = Piece::kS;
  int rotation = 0;
  int column = 0;  // leftmost column of the footprint

  friend bool operator==(const Placement&, const Placement&) = default;
};

// All rotation/column pairs whose footprint fits horizontally, rotation-major.
std::vector<Placement> enumerate_actions(const Board& board, Piece piece);

struct DropResult {
  Board board;
  int cleared = 0;
  bool terminal = false;  // part of the resting piece lies above the top row
};

// Drops the piece straight down to its resting row and clears full rows. If
// the piece does not fit, the returned board is unchanged and nothing clears.
// Throws std::invalid_argument when the footprint leaves the board sideways.
DropResult drop(const Board& board, const Placement& p);

// exp(-holes / z)
double hole_reward(const Board& board, double z);

// One-hot blocks for column heights, adjacent signed height differences
// (clipped to [-diff_clip, diff_clip]) and the hole count (capped).
struct FeatureEncoding {
  int width = 10;
  int max_height = 10;
  int diff_clip = 7;
  int hole_cap = 14;

  std::size_t height_block() const noexcept;
  std::size_t diff_block() const noexcept;
  std::size_t hole_block() const noexcept;
  std::size_t size() const noexcept { return height_block() + diff_block() + hole_block(); }

  static FeatureEncoding sz_tetris_default();  // 460 bits
  static FeatureEncoding tetris10_default();   // 260 bits

  friend bool operator==(const FeatureEncoding&, const FeatureEncoding&) = default;
};

void encode_features(const Board& board, const FeatureEncoding& enc, std::span<double> out);
std::vector<double> encode_features(const Board& board, const FeatureEncoding& enc);

enum class Variant { kSZ, kStandard };

std::string_view to_string(Variant v) noexcept;

// i.i.d. uniform over {S, Z} or over all seven pieces.
Piece sample_piece(Variant v, Rng& rng);
std::vector<Piece> piece_sequence(Variant v, std::size_t n, Rng& rng);

struct TetrisConfig {
  Variant variant = Variant::kSZ;
  int width = 10;
  int height = 20;
  double z = 33.0;  // reward scale
  FeatureEncoding encoding = FeatureEncoding::sz_tetris_default();
  bool record_replay = false;

  static TetrisConfig sz_tetris();
  static TetrisConfig tetris10();
};

// Piece sequence and chosen placements of one episode.
struct Replay {
  Variant variant = Variant::kSZ;
  int width = 10;
  int height = 20;
  std::vector<Piece> pieces;
  std::vector<Placement> placements;
};

struct ReplayOutcome {
  Board board;
  int score = 0;
  bool terminal = false;
};

ReplayOutcome replay(const Replay& r);

void to_json(nlohmann::json& j, const Replay& r);
void from_json(const nlohmann::json& j, Replay& r);

// Afterstate environment over Tetris boards. The state is the board after the
// last placement and line clears; the piece to place is drawn after each step.
// Reward is exp(-holes/z) on the new board, 0 on the terminal step. Score is
// the number of cleared lines.
class TetrisEnvironment final : public AfterstateEnvironment {
 public:
  explicit TetrisEnvironment(TetrisConfig cfg);

  std::size_t feature_dim() const override { return cfg_.encoding.size(); }
  void reset(Rng& rng) override;
  std::span<const double> state_features() const override { return features_; }
  std::size_t action_count() const override { return placements_.size(); }
  Candidate preview(std::size_t action) override;
  Transition step(std::size_t action, Rng& rng) override;

  const Board& board() const noexcept { return board_; }
  Piece current_piece() const noexcept { return piece_; }
  const std::vector<Placement>& placements() const noexcept { return placements_; }
  const TetrisConfig& config() const noexcept { return cfg_; }
  int total_cleared() const noexcept { return total_cleared_; }
  bool done() const noexcept { return done_; }
  const std::optional<Replay>& replay_log() const noexcept { return replay_; }

 private:
  void draw_piece(Rng& rng);

  TetrisConfig cfg_;
  Board board_;
  Piece piece_ = Piece::kS;
  std::vector<Placement> placements_;
  std::vector<double> features_;
  std::vector<double> preview_features_;
  int total_cleared_ = 0;
  bool done_ = true;
  std::optional<Replay> replay_;
};

}  // namespace ompac::tetris
