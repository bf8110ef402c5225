#include "factopt/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "factopt/config.hpp"

namespace factopt {

namespace {

constexpr char magic[8] = {'F', 'O', 'P', 'T', 'C', 'K', 'P', '1'};

enum : std::uint8_t { kStateNone = 0, kStateAdam, kStateFactored, kStateVector, kStateMean };

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

void put_i64(std::string& out, std::int64_t v) {
  put_u64(out, static_cast<std::uint64_t>(v));
}

void put_doubles(std::string& out, std::span<const double> values) {
  out.append(reinterpret_cast<const char*>(values.data()), values.size() * 8);
}

void put_section(std::string& out, char role, std::span<const double> values) {
  out.push_back(role);
  put_u64(out, values.size());
  put_doubles(out, values);
}

class Cursor {
 public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  std::size_t pos() const { return pos_; }

  std::string_view take(std::size_t n) {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError("truncated or corrupt checkpoint");
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32() {
    std::uint32_t v;
    std::memcpy(&v, take(4).data(), 4);
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v;
    std::memcpy(&v, take(8).data(), 8);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }

  DenseVector doubles(std::size_t count) {
    if (count == 0 || count > (bytes_.size() - pos_) / 8)
      throw CheckpointError("truncated or corrupt checkpoint");
    std::string_view raw = take(count * 8);
    std::vector<double> v(count);
    std::memcpy(v.data(), raw.data(), raw.size());
    return DenseVector::of(std::move(v));
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

struct Section {
  char role;
  DenseVector data;
};

}  // namespace

std::string serialize_checkpoint(std::uint64_t config_hash,
                                 const std::string& config_text, std::int64_t step,
                                 std::span<const ParamSlot> slots,
                                 std::span<const SlotState> states) {
  if (slots.size() != states.size())
    throw std::invalid_argument("serialize_checkpoint: slot/state count mismatch");
  std::string out;
  out.append(magic, sizeof(magic));
  put_u32(out, checkpoint_version);
  put_u64(out, config_hash);
  put_u64(out, config_text.size());
  out.append(config_text);
  put_i64(out, step);
  put_u32(out, static_cast<std::uint32_t>(slots.size()));

  for (std::size_t i = 0; i < slots.size(); ++i) {
    const ParamSlot& slot = slots[i];
    put_u32(out, static_cast<std::uint32_t>(slot.name().size()));
    out.append(slot.name());
    out.push_back(static_cast<char>(slot.kind() == SlotKind::Scalar   ? 0
                                    : slot.kind() == SlotKind::Vector ? 1
                                                                      : 2));
    put_u64(out, slot.rows());
    put_u64(out, slot.cols());
    put_doubles(out, slot.flat());

    // Accumulator sections follow the fixed order r, c, m, v, vhat, mean.
    std::visit(
        [&](const auto& st) {
          using T = std::decay_t<decltype(st)>;
          if constexpr (std::is_same_v<T, std::monostate>) {
            out.push_back(kStateNone);
            put_i64(out, 0);
            out.push_back(0);
          } else if constexpr (std::is_same_v<T, AdamState>) {
            out.push_back(kStateAdam);
            put_i64(out, st.t);
            out.push_back(st.m ? 2 : 1);
            if (st.m) put_section(out, 'm', st.m->flat());
            put_section(out, 'v', st.v.flat());
          } else if constexpr (std::is_same_v<T, FactoredState>) {
            out.push_back(kStateFactored);
            put_i64(out, st.t);
            out.push_back(st.m ? 3 : 2);
            put_section(out, 'r', st.r.flat());
            put_section(out, 'c', st.c.flat());
            if (st.m) put_section(out, 'm', st.m->flat());
          } else if constexpr (std::is_same_v<T, VectorState>) {
            out.push_back(kStateVector);
            put_i64(out, st.t);
            out.push_back(st.m ? 2 : 1);
            if (st.m) put_section(out, 'm', st.m->flat());
            put_section(out, 'h', st.vhat.flat());
          } else {
            out.push_back(kStateMean);
            put_i64(out, st.t);
            out.push_back(1);
            put_section(out, 'a', st.mean.flat());
          }
        },
        states[i]);
  }

  put_u64(out, fnv1a64(out));
  return out;
}

CheckpointData parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof(magic) + 8)
    throw CheckpointError("truncated or corrupt checkpoint");
  if (std::memcmp(bytes.data(), magic, sizeof(magic)) != 0)
    throw CheckpointError("not a checkpoint file");

  std::uint64_t stored_sum;
  std::memcpy(&stored_sum, bytes.data() + bytes.size() - 8, 8);
  if (fnv1a64(bytes.substr(0, bytes.size() - 8)) != stored_sum)
    throw CheckpointError("truncated or corrupt checkpoint");

  Cursor cur(bytes.substr(0, bytes.size() - 8));
  cur.take(sizeof(magic));

  CheckpointData data;
  data.version = cur.u32();
  if (data.version != checkpoint_version)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(data.version));
  data.config_hash = cur.u64();
  const std::uint64_t text_len = cur.u64();
  data.config_text = std::string(cur.take(text_len));
  data.step = cur.i64();

  const std::uint32_t slot_count = cur.u32();
  for (std::uint32_t s = 0; s < slot_count; ++s) {
    const std::uint32_t name_len = cur.u32();
    std::string name(cur.take(name_len));
    const std::uint8_t kind = cur.u8();
    const std::uint64_t rows = cur.u64();
    const std::uint64_t cols = cur.u64();
    if (rows == 0 || cols == 0 || kind > 2 || rows > (1u << 30) || cols > (1u << 30))
      throw CheckpointError("truncated or corrupt checkpoint");

    DenseVector values = cur.doubles(rows * cols);
    TensorValue value;
    if (kind == 0) {
      if (rows != 1 || cols != 1) throw CheckpointError("bad scalar slot shape");
      value = values[0];
    } else if (kind == 1) {
      if (cols != 1) throw CheckpointError("bad vector slot shape");
      value = std::move(values);
    } else {
      std::vector<double> raw(values.flat().begin(), values.flat().end());
      value = DenseMatrix::of(rows, cols, std::move(raw));
    }
    data.slots.emplace_back(std::move(name), std::move(value));

    const std::size_t state_begin = cur.pos();
    const std::uint8_t state_kind = cur.u8();
    const std::int64_t state_t = cur.i64();
    const std::uint8_t n_sections = cur.u8();
    std::vector<Section> sections;
    std::size_t payload = 0;
    for (std::uint8_t k = 0; k < n_sections; ++k) {
      const char role = static_cast<char>(cur.u8());
      const std::uint64_t count = cur.u64();
      sections.push_back({role, cur.doubles(count)});
      payload += count * 8;
    }

    auto find = [&](char role) -> DenseVector* {
      for (auto& sec : sections)
        if (sec.role == role) return &sec.data;
      return nullptr;
    };
    auto require = [&](char role) -> DenseVector& {
      DenseVector* v = find(role);
      if (!v) throw CheckpointError(std::string("missing accumulator section '") +
                                    role + "'");
      return *v;
    };
    auto check_len = [&](const DenseVector& v, std::size_t want) {
      if (v.size() != want) throw CheckpointError("accumulator size mismatch");
    };

    const ParamSlot& slot = data.slots.back();
    SlotState state;
    switch (state_kind) {
      case kStateNone:
        state = std::monostate{};
        break;
      case kStateAdam: {
        AdamState st;
        st.t = state_t;
        st.v = std::move(require('v'));
        check_len(st.v, slot.numel());
        if (DenseVector* mv = find('m')) {
          check_len(*mv, slot.numel());
          st.m = std::move(*mv);
        }
        state = std::move(st);
        break;
      }
      case kStateFactored: {
        FactoredState st;
        st.t = state_t;
        st.r = std::move(require('r'));
        st.c = std::move(require('c'));
        check_len(st.r, slot.rows());
        check_len(st.c, slot.cols());
        if (DenseVector* mv = find('m')) {
          check_len(*mv, slot.numel());
          std::vector<double> raw(mv->flat().begin(), mv->flat().end());
          st.m = DenseMatrix::of(slot.rows(), slot.cols(), std::move(raw));
        }
        state = std::move(st);
        break;
      }
      case kStateVector: {
        VectorState st;
        st.t = state_t;
        st.vhat = std::move(require('h'));
        check_len(st.vhat, slot.numel());
        if (DenseVector* mv = find('m')) {
          check_len(*mv, slot.numel());
          st.m = std::move(*mv);
        }
        state = std::move(st);
        break;
      }
      case kStateMean: {
        MeanState st;
        st.t = state_t;
        st.mean = std::move(require('a'));
        if (st.mean.size() != slot.rows() && st.mean.size() != slot.cols())
          throw CheckpointError("accumulator size mismatch");
        state = std::move(st);
        break;
      }
      default:
        throw CheckpointError("unknown optimizer state kind");
    }
    data.states.push_back(std::move(state));
    data.state_payload_bytes.push_back(payload);
    data.state_total_bytes.push_back(cur.pos() - state_begin);
  }

  return data;
}

void save_checkpoint(const std::string& path, std::uint64_t config_hash,
                     const std::string& config_text, std::int64_t step,
                     std::span<const ParamSlot> slots,
                     std::span<const SlotState> states) {
  const std::string bytes =
      serialize_checkpoint(config_hash, config_text, step, slots, states);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open checkpoint file '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint write failed");
}

CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint file '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return parse_checkpoint(bytes);
}

}  // namespace factopt
