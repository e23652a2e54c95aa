#include "fatformer/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace ftf {

namespace {

constexpr uint16_t kVersion = 1;

const uint32_t* crc_table() {
    static const auto table = [] {
        static uint32_t t[256];
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}

void append_u16(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xFF));
    buf.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void append_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void append_f32(std::string& buf, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    append_u32(buf, bits);
}

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    void need(size_t n, const char* what) const {
        if (pos + n > buf.size())
            throw IoError(std::string("checkpoint truncated reading ") + what + " at offset " +
                          std::to_string(pos));
    }
    uint16_t u16(const char* what) {
        need(2, what);
        const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 2;
        return static_cast<uint16_t>(b[0] | (b[1] << 8));
    }
    uint32_t u32(const char* what) {
        need(4, what);
        const auto* b = reinterpret_cast<const unsigned char*>(buf.data() + pos);
        pos += 4;
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
        return v;
    }
    float f32(const char* what) {
        const uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string bytes(size_t n, const char* what) {
        need(n, what);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace

uint32_t crc32(const unsigned char* data, size_t len, uint32_t seed) {
    const uint32_t* t = crc_table();
    uint32_t c = seed ^ 0xFFFFFFFFu;
    for (size_t i = 0; i < len; ++i) c = t[(c ^ data[i]) & 0xFF] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

void write_tensor_file(const std::string& path, const std::vector<NamedTensor>& tensors) {
    std::string buf;
    buf += "FTFC";
    append_u16(buf, kVersion);
    append_u32(buf, static_cast<uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        if (t.name.size() > 0xFFFF) throw ContractError("tensor name too long: " + t.name);
        append_u16(buf, static_cast<uint16_t>(t.name.size()));
        buf += t.name;
        if (t.shape.size() > 0xFF) throw ContractError("tensor rank too large: " + t.name);
        buf.push_back(static_cast<char>(t.shape.size()));
        long n = 1;
        for (int d : t.shape) {
            append_u32(buf, static_cast<uint32_t>(d));
            n *= d;
        }
        if (n != static_cast<long>(t.values.size()))
            throw ContractError("tensor " + t.name + " shape/value mismatch");
        for (float v : t.values) append_f32(buf, v);
    }
    const uint32_t crc = crc32(reinterpret_cast<const unsigned char*>(buf.data()), buf.size());
    append_u32(buf, crc);

    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("write failed: " + path);
}

std::vector<NamedTensor> read_tensor_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

    if (buf.size() < 14) throw IoError("checkpoint truncated: only " + std::to_string(buf.size()) +
                                       " bytes");
    // verify trailing CRC over the payload before parsing
    const size_t payload = buf.size() - 4;
    uint32_t stored = 0;
    for (int i = 0; i < 4; ++i)
        stored |= static_cast<uint32_t>(static_cast<unsigned char>(buf[payload + static_cast<size_t>(i)]))
                  << (8 * i);
    const uint32_t computed = crc32(reinterpret_cast<const unsigned char*>(buf.data()), payload);
    if (stored != computed)
        throw IoError("checkpoint CRC mismatch at offset " + std::to_string(payload) +
                      " (stored " + std::to_string(stored) + ", computed " +
                      std::to_string(computed) + ")");

    Reader r{buf};
    if (r.bytes(4, "magic") != "FTFC") throw IoError("bad checkpoint magic at offset 0");
    const uint16_t version = r.u16("version");
    if (version != kVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version) + " at offset 4");
    const uint32_t count = r.u32("tensor count");

    std::vector<NamedTensor> out;
    out.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        const uint16_t name_len = r.u16("name length");
        t.name = r.bytes(name_len, "name");
        const unsigned rank = static_cast<unsigned char>(r.bytes(1, "rank")[0]);
        long n = 1;
        for (unsigned d = 0; d < rank; ++d) {
            const uint32_t dim = r.u32("dims");
            t.shape.push_back(static_cast<int>(dim));
            n *= dim;
        }
        t.values.resize(static_cast<size_t>(n));
        for (auto& v : t.values) v = r.f32("data");
        out.push_back(std::move(t));
    }
    if (r.pos != payload)
        throw IoError("checkpoint has trailing bytes at offset " + std::to_string(r.pos));
    return out;
}

}  // namespace ftf
