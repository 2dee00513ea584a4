#include "ompac/tetris.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace ompac::tetris {

namespace {

// Footprints with y pointing up; each orientation normalized to min x = min y = 0.
constexpr std::array<Footprint, 2> kS = {{
    {{{0, 0}, {1, 0}, {1, 1}, {2, 1}}},
    {{{1, 0}, {0, 1}, {1, 1}, {0, 2}}},
}};
constexpr std::array<Footprint, 2> kZ = {{
    {{{1, 0}, {2, 0}, {0, 1}, {1, 1}}},
    {{{0, 0}, {0, 1}, {1, 1}, {1, 2}}},
}};
constexpr std::array<Footprint, 1> kO = {{
    {{{0, 0}, {1, 0}, {0, 1}, {1, 1}}},
}};
constexpr std::array<Footprint, 2> kI = {{
    {{{0, 0}, {1, 0}, {2, 0}, {3, 0}}},
    {{{0, 0}, {0, 1}, {0, 2}, {0, 3}}},
}};
constexpr std::array<Footprint, 4> kJ = {{
    {{{0, 0}, {1, 0}, {2, 0}, {0, 1}}},
    {{{2, 0}, {0, 1}, {1, 1}, {2, 1}}},
    {{{0, 0}, {1, 0}, {1, 1}, {1, 2}}},
    {{{0, 0}, {0, 1}, {0, 2}, {1, 2}}},
}};
constexpr std::array<Footprint, 4> kL = {{
    {{{0, 0}, {1, 0}, {2, 0}, {2, 1}}},
    {{{0, 0}, {0, 1}, {1, 1}, {2, 1}}},
    {{{0, 0}, {1, 0}, {0, 1}, {0, 2}}},
    {{{1, 0}, {1, 1}, {0, 2}, {1, 2}}},
}};
constexpr std::array<Footprint, 4> kT = {{
    {{{0, 0}, {1, 0}, {2, 0}, {1, 1}}},
    {{{1, 0}, {0, 1}, {1, 1}, {2, 1}}},
    {{{0, 0}, {0, 1}, {0, 2}, {1, 1}}},
    {{{1, 0}, {1, 1}, {1, 2}, {0, 1}}},
}};

constexpr int kMaxWidth = 16;

}  // namespace

char to_char(Piece p) noexcept {
  constexpr std::string_view kNames = "SZOIJLT";
  return kNames[static_cast<std::size_t>(p)];
}

Piece piece_from_char(char c) {
  for (Piece p : kAllPieces)
    if (to_char(p) == c) return p;
  throw std::invalid_argument(std::string("unknown tetromino '") + c + "'");
}

std::span<const Footprint> rotations(Piece p) noexcept {
  switch (p) {
    case Piece::kS: return kS;
    case Piece::kZ: return kZ;
    case Piece::kO: return kO;
    case Piece::kI: return kI;
    case Piece::kJ: return kJ;
    case Piece::kL: return kL;
    case Piece::kT: return kT;
  }
  return {};
}

int footprint_width(const Footprint& f) noexcept {
  int w = 0;
  for (const Cell& c : f) w = std::max(w, c.x + 1);
  return w;
}

Board::Board(int width, int height) : width_(width), height_(height) {
  if (width < 4 || width > kMaxWidth || height < 4)
    throw std::invalid_argument("board must be 4..16 columns wide and at least 4 rows tall");
  full_mask_ = static_cast<std::uint16_t>((1U << width) - 1U);
  rows_.assign(static_cast<std::size_t>(height), 0);
}

Board Board::from_rows(const std::vector<std::string>& rows_top_down) {
  if (rows_top_down.empty()) throw std::invalid_argument("from_rows: no rows");
  Board b(static_cast<int>(rows_top_down.front().size()), static_cast<int>(rows_top_down.size()));
  for (int r = 0; r < b.height_; ++r) {
    const std::string& row = rows_top_down[static_cast<std::size_t>(r)];
    if (static_cast<int>(row.size()) != b.width_)
      throw std::invalid_argument("from_rows: ragged rows");
    for (int x = 0; x < b.width_; ++x) b.set(x, b.height_ - 1 - r, row[x] == '#');
  }
  return b;
}

void Board::set(int x, int y, bool value) {
  if (x < 0 || x >= width_ || y < 0 || y >= height_)
    throw std::out_of_range("board cell out of range");
  const auto bit = static_cast<std::uint16_t>(1U << x);
  if (value)
    rows_[y] |= bit;
  else
    rows_[y] &= static_cast<std::uint16_t>(~bit);
}

int Board::column_height(int x) const noexcept {
  for (int y = height_ - 1; y >= 0; --y)
    if (occupied(x, y)) return y + 1;
  return 0;
}

std::vector<int> Board::column_heights() const {
  std::vector<int> h(static_cast<std::size_t>(width_), 0);
  std::uint16_t seen = 0;
  for (int y = height_ - 1; y >= 0 && seen != full_mask_; --y) {
    std::uint16_t fresh = rows_[y] & static_cast<std::uint16_t>(~seen);
    while (fresh) {
      const int x = std::countr_zero(fresh);
      h[static_cast<std::size_t>(x)] = y + 1;
      fresh &= static_cast<std::uint16_t>(fresh - 1);
    }
    seen |= rows_[y];
  }
  return h;
}

int Board::holes() const noexcept {
  // Scan downwards; a column becomes "covered" at its first occupied cell.
  std::uint16_t covered = 0;
  int count = 0;
  for (int y = height_ - 1; y >= 0; --y) {
    count += std::popcount(static_cast<std::uint16_t>(covered & ~rows_[y]));
    covered |= rows_[y];
  }
  return count;
}

int Board::occupied_count() const noexcept {
  int n = 0;
  for (std::uint16_t r : rows_) n += std::popcount(r);
  return n;
}

int Board::clear_full_rows() {
  int write = 0;
  int cleared = 0;
  for (int read = 0; read < height_; ++read) {
    if (rows_[read] == full_mask_) {
      ++cleared;
      continue;
    }
    rows_[write++] = rows_[read];
  }
  for (; write < height_; ++write) rows_[write] = 0;
  return cleared;
}

std::string Board::render() const {
  std::string out;
  out.reserve(static_cast<std::size_t>((width_ + 1) * height_));
  for (int y = height_ - 1; y >= 0; --y) {
    for (int x = 0; x < width_; ++x) out.push_back(occupied(x, y) ? '#' : '.');
    out.push_back('\n');
  }
  return out;
}

std::vector<Placement> enumerate_actions(const Board& board, Piece piece) {
  std::vector<Placement> out;
  const auto rots = rotations(piece);
  for (std::size_t r = 0; r < rots.size(); ++r) {
    const int w = footprint_width(rots[r]);
    for (int col = 0; col + w <= board.width(); ++col)
      out.push_back({piece, static_cast<int>(r), col});
  }
  return out;
}

DropResult drop(const Board& board, const Placement& p) {
  const auto rots = rotations(p.piece);
  if (p.rotation < 0 || static_cast<std::size_t>(p.rotation) >= rots.size())
    throw std::invalid_argument("drop: invalid rotation");
  const Footprint& f = rots[static_cast<std::size_t>(p.rotation)];
  if (p.column < 0 || p.column + footprint_width(f) > board.width())
    throw std::invalid_argument("drop: footprint outside the board");

  // Lowest footprint cell per column decides where the piece lands.
  std::array<int, 4> lowest{};
  lowest.fill(4);
  for (const Cell& c : f) lowest[c.x] = std::min(lowest[c.x], c.y);
  int land = 0;
  for (int dx = 0; dx < 4; ++dx) {
    if (lowest[dx] == 4) continue;
    land = std::max(land, board.column_height(p.column + dx) - lowest[dx]);
  }

  DropResult r{board, 0, false};
  for (const Cell& c : f) {
    if (land + c.y >= board.height()) {
      r.terminal = true;
      return r;
    }
  }
  for (const Cell& c : f) r.board.set(p.column + c.x, land + c.y, true);
  r.cleared = r.board.clear_full_rows();
  return r;
}

double hole_reward(const Board& board, double z) {
  if (!(z > 0.0)) throw std::invalid_argument("hole_reward: z must be positive");
  return std::exp(-static_cast<double>(board.holes()) / z);
}

std::size_t FeatureEncoding::height_block() const noexcept {
  return static_cast<std::size_t>(width * (max_height + 1));
}
std::size_t FeatureEncoding::diff_block() const noexcept {
  return static_cast<std::size_t>((width - 1) * (2 * diff_clip + 1));
}
std::size_t FeatureEncoding::hole_block() const noexcept {
  return static_cast<std::size_t>(hole_cap + 1);
}

FeatureEncoding FeatureEncoding::sz_tetris_default() { return {10, 20, 10, 60}; }
FeatureEncoding FeatureEncoding::tetris10_default() { return {10, 10, 7, 14}; }

void encode_features(const Board& board, const FeatureEncoding& enc, std::span<double> out) {
  if (board.width() != enc.width || board.height() != enc.max_height)
    throw std::invalid_argument("encode_features: board does not match the encoding");
  if (out.size() != enc.size()) throw std::invalid_argument("encode_features: wrong output size");
  std::fill(out.begin(), out.end(), 0.0);

  const auto heights = board.column_heights();
  const std::size_t hbins = static_cast<std::size_t>(enc.max_height + 1);
  for (std::size_t c = 0; c < heights.size(); ++c)
    out[c * hbins + static_cast<std::size_t>(heights[c])] = 1.0;

  const std::size_t dbins = static_cast<std::size_t>(2 * enc.diff_clip + 1);
  const std::size_t doff = enc.height_block();
  for (std::size_t c = 0; c + 1 < heights.size(); ++c) {
    const int d = std::clamp(heights[c + 1] - heights[c], -enc.diff_clip, enc.diff_clip);
    out[doff + c * dbins + static_cast<std::size_t>(d + enc.diff_clip)] = 1.0;
  }

  const std::size_t hoff = doff + enc.diff_block();
  out[hoff + static_cast<std::size_t>(std::min(board.holes(), enc.hole_cap))] = 1.0;
}

std::vector<double> encode_features(const Board& board, const FeatureEncoding& enc) {
  std::vector<double> out(enc.size());
  encode_features(board, enc, out);
  return out;
}

std::string_view to_string(Variant v) noexcept {
  return v == Variant::kSZ ? "sz-tetris" : "tetris-10x10";
}

Piece sample_piece(Variant v, Rng& rng) {
  if (v == Variant::kSZ) return kSZPieces[uniform_index(rng, kSZPieces.size())];
  return kAllPieces[uniform_index(rng, kAllPieces.size())];
}

std::vector<Piece> piece_sequence(Variant v, std::size_t n, Rng& rng) {
  std::vector<Piece> out(n);
  for (Piece& p : out) p = sample_piece(v, rng);
  return out;
}

TetrisConfig TetrisConfig::sz_tetris() {
  TetrisConfig c;
  c.variant = Variant::kSZ;
  c.height = 20;
  c.z = 33.0;
  c.encoding = FeatureEncoding::sz_tetris_default();
  return c;
}

TetrisConfig TetrisConfig::tetris10() {
  TetrisConfig c;
  c.variant = Variant::kStandard;
  c.height = 10;
  c.z = 33.0 / 2.0;
  c.encoding = FeatureEncoding::tetris10_default();
  return c;
}

ReplayOutcome replay(const Replay& r) {
  if (r.placements.size() > r.pieces.size())
    throw std::invalid_argument("replay: more placements than pieces");
  ReplayOutcome out{Board(r.width, r.height), 0, false};
  for (std::size_t t = 0; t < r.placements.size(); ++t) {
    if (r.placements[t].piece != r.pieces[t])
      throw std::invalid_argument("replay: placement does not match the piece sequence");
    DropResult d = drop(out.board, r.placements[t]);
    if (d.terminal) {
      out.terminal = true;
      break;
    }
    out.board = std::move(d.board);
    out.score += d.cleared;
  }
  return out;
}

void to_json(nlohmann::json& j, const Replay& r) {
  std::string pieces;
  for (Piece p : r.pieces) pieces.push_back(to_char(p));
  auto placements = nlohmann::json::array();
  for (const Placement& p : r.placements) placements.push_back({p.rotation, p.column});
  j = nlohmann::json{{"variant", to_string(r.variant)}, {"width", r.width},
                     {"height", r.height},              {"pieces", pieces},
                     {"placements", placements}};
}

void from_json(const nlohmann::json& j, Replay& r) {
  const auto variant = j.at("variant").get<std::string>();
  if (variant != "sz-tetris" && variant != "tetris-10x10")
    throw std::invalid_argument("replay: unknown variant " + variant);
  r.variant = variant == "sz-tetris" ? Variant::kSZ : Variant::kStandard;
  r.width = j.at("width").get<int>();
  r.height = j.at("height").get<int>();
  r.pieces.clear();
  for (char c : j.at("pieces").get<std::string>()) r.pieces.push_back(piece_from_char(c));
  r.placements.clear();
  const auto& pl = j.at("placements");
  for (std::size_t t = 0; t < pl.size(); ++t) {
    if (t >= r.pieces.size()) throw std::invalid_argument("replay: more placements than pieces");
    r.placements.push_back({r.pieces[t], pl[t].at(0).get<int>(), pl[t].at(1).get<int>()});
  }
}

TetrisEnvironment::TetrisEnvironment(TetrisConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.encoding.width != cfg_.width || cfg_.encoding.max_height != cfg_.height)
    throw std::invalid_argument("tetris: feature encoding does not match the board size");
  board_ = Board(cfg_.width, cfg_.height);
  features_.assign(cfg_.encoding.size(), 0.0);
  preview_features_.assign(cfg_.encoding.size(), 0.0);
}

void TetrisEnvironment::draw_piece(Rng& rng) {
  piece_ = sample_piece(cfg_.variant, rng);
  placements_ = enumerate_actions(board_, piece_);
  if (replay_) replay_->pieces.push_back(piece_);
}

void TetrisEnvironment::reset(Rng& rng) {
  board_ = Board(cfg_.width, cfg_.height);
  total_cleared_ = 0;
  done_ = false;
  if (cfg_.record_replay)
    replay_ = Replay{cfg_.variant, cfg_.width, cfg_.height, {}, {}};
  else
    replay_.reset();
  encode_features(board_, cfg_.encoding, features_);
  draw_piece(rng);
}

Candidate TetrisEnvironment::preview(std::size_t action) {
  const DropResult d = drop(board_, placements_.at(action));
  if (d.terminal) return {{}, true};
  encode_features(d.board, cfg_.encoding, preview_features_);
  return {preview_features_, false};
}

Transition TetrisEnvironment::step(std::size_t action, Rng& rng) {
  if (done_) throw EnvironmentError("tetris: step after the episode ended");
  if (action >= placements_.size())
    throw EnvironmentError("tetris: action " + std::to_string(action) + " out of range");
  if (replay_) replay_->placements.push_back(placements_[action]);
  DropResult d = drop(board_, placements_[action]);
  if (d.terminal) {
    done_ = true;
    return {0.0, 0.0, true};
  }
  board_ = std::move(d.board);
  total_cleared_ += d.cleared;
  encode_features(board_, cfg_.encoding, features_);
  const double r = hole_reward(board_, cfg_.z);
  draw_piece(rng);
  return {r, static_cast<double>(d.cleared), false};
}

}  // namespace ompac::tetris
