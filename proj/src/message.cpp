#include "fcncp/message.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace fcncp {

bool Message::operator==(const Message& o) const {
  auto mats_equal = [](const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i].rows != b[i].rows || a[i].cols != b[i].cols ||
          a[i].values != b[i].values)
        return false;
    return true;
  };
  return type == o.type && client == o.client && round == o.round &&
         flag == o.flag && rel_err == o.rel_err && indices == o.indices &&
         mats_equal(matrices, o.matrices);
}

namespace {

[[noreturn]] void bad(const char* what) {
  throw Error(ErrorCode::protocol, std::string("wire decode: ") + what);
}

struct Writer {
  std::vector<std::uint8_t> out;
  void u8(std::uint8_t v) { out.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    u32(static_cast<std::uint32_t>(m.rows));
    u32(static_cast<std::uint32_t>(m.cols));
    for (double x : m.values) f64(x);
  }
};

struct Reader {
  const std::uint8_t* p;
  const std::uint8_t* end;
  std::uint8_t u8() {
    if (p >= end) bad("truncated frame");
    return *p++;
  }
  std::uint32_t u32() {
    if (end - p < 4) bad("truncated frame");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(*p++) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    if (end - p < 8) bad("truncated frame");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix matrix() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    if (rows == 0 || cols == 0) bad("empty matrix");
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    if (n > kMaxFrameBytes / 8) bad("matrix size overflow");
    if (static_cast<std::uint64_t>(end - p) < n * 8) bad("truncated matrix payload");
    Matrix m(rows, cols);
    for (double& x : m.values) x = f64();
    return m;
  }
  std::vector<Matrix> matrices() {
    const std::uint32_t count = u32();
    if (count > 255) bad("matrix count overflow");
    std::vector<Matrix> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) out.push_back(matrix());
    return out;
  }
};

}  // namespace

std::vector<std::uint8_t> encode_message(const Message& m) {
  Writer body;
  body.u8(kProtocolVersion);
  body.u8(static_cast<std::uint8_t>(m.type));
  switch (m.type) {
    case MsgType::Hello:
      body.u32(m.client);
      break;
    case MsgType::Factors:
      body.u32(static_cast<std::uint32_t>(m.matrices.size()));
      for (const Matrix& mat : m.matrices) body.matrix(mat);
      break;
    case MsgType::Locations:
      body.u32(static_cast<std::uint32_t>(m.indices.size()));
      for (std::uint64_t v : m.indices) body.u64(v);
      break;
    case MsgType::PublicUpload:
      body.u32(m.round);
      body.f64(m.rel_err);
      body.u32(static_cast<std::uint32_t>(m.matrices.size()));
      for (const Matrix& mat : m.matrices) body.matrix(mat);
      break;
    case MsgType::GlobalBcast:
      body.u32(m.round);
      body.u8(m.flag);
      body.u32(static_cast<std::uint32_t>(m.matrices.size()));
      for (const Matrix& mat : m.matrices) body.matrix(mat);
      break;
    case MsgType::RoundStatus:
      body.u32(m.round);
      body.u8(m.flag);
      body.f64(m.rel_err);
      break;
    case MsgType::Shutdown:
      break;
    default:
      throw Error(ErrorCode::protocol, "encode: unknown message type");
  }
  Writer frame;
  frame.u32(static_cast<std::uint32_t>(body.out.size()));
  frame.out.insert(frame.out.end(), body.out.begin(), body.out.end());
  return frame.out;
}

Message decode_message(const std::uint8_t* data, std::size_t len) {
  Reader r{data, data + len};
  const std::uint32_t declared = r.u32();
  if (declared > kMaxFrameBytes) bad("length overflow");
  if (static_cast<std::uint64_t>(len) != 4ull + declared) bad("length mismatch");
  if (r.u8() != kProtocolVersion) bad("version mismatch");
  const std::uint8_t ty = r.u8();
  Message m;
  switch (ty) {
    case 0x01:
      m.type = MsgType::Hello;
      m.client = r.u32();
      break;
    case 0x02:
      m.type = MsgType::Factors;
      m.matrices = r.matrices();
      break;
    case 0x03: {
      m.type = MsgType::Locations;
      const std::uint32_t count = r.u32();
      if (count > 65536) bad("location count overflow");
      for (std::uint32_t i = 0; i < count; ++i) m.indices.push_back(r.u64());
      break;
    }
    case 0x04:
      m.type = MsgType::PublicUpload;
      m.round = r.u32();
      m.rel_err = r.f64();
      m.matrices = r.matrices();
      if (!std::isfinite(m.rel_err)) bad("non-finite rel_err");
      break;
    case 0x05:
      m.type = MsgType::GlobalBcast;
      m.round = r.u32();
      m.flag = r.u8();
      m.matrices = r.matrices();
      break;
    case 0x06:
      m.type = MsgType::RoundStatus;
      m.round = r.u32();
      m.flag = r.u8();
      m.rel_err = r.f64();
      break;
    case 0x07:
      m.type = MsgType::Shutdown;
      break;
    default:
      bad("unknown message type");
  }
  if (r.p != r.end) bad("trailing bytes");
  return m;
}

}  // namespace fcncp
