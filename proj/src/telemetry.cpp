#include "ecgmon/telemetry.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "ecgmon/crc32.hpp"
#include "ecgmon/error.hpp"
#include "ecgmon/rng.hpp"

namespace ecgmon {
namespace {

constexpr std::uint8_t kMagic[4] = {'E', 'C', 'G', '1'};

void put_u16(std::vector<std::uint8_t>& buf, std::uint16_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xFF));
    buf.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<std::int16_t> quantize_samples(const std::vector<double>& millivolts,
                                           float gain_uv_per_lsb) {
    if (!(gain_uv_per_lsb > 0.0f) || !std::isfinite(gain_uv_per_lsb)) {
        raise("invalid-parameter", "gain must be positive and finite");
    }
    std::vector<std::int16_t> out(millivolts.size());
    const double scale = 1000.0 / static_cast<double>(gain_uv_per_lsb);  // mV -> counts
    for (std::size_t i = 0; i < millivolts.size(); ++i) {
        if (!std::isfinite(millivolts[i])) raise("invalid-input", "non-finite sample");
        const double counts = std::nearbyint(millivolts[i] * scale);
        out[i] = static_cast<std::int16_t>(std::clamp(counts, -32768.0, 32767.0));
    }
    return out;
}

std::vector<double> dequantize_samples(const std::vector<std::int16_t>& counts,
                                       float gain_uv_per_lsb) {
    if (!(gain_uv_per_lsb > 0.0f) || !std::isfinite(gain_uv_per_lsb)) {
        raise("invalid-parameter", "gain must be positive and finite");
    }
    std::vector<double> out(counts.size());
    const double scale = static_cast<double>(gain_uv_per_lsb) / 1000.0;  // counts -> mV
    for (std::size_t i = 0; i < counts.size(); ++i) {
        out[i] = static_cast<double>(counts[i]) * scale;
    }
    return out;
}

std::vector<std::uint8_t> encode_frame(const TelemetryFrame& frame) {
    if (frame.version != TelemetryFrame::kVersion) {
        raise("invalid-parameter", "unsupported frame version");
    }
    if (frame.samples.empty() || frame.samples.size() > TelemetryFrame::kMaxSamples) {
        raise("invalid-parameter", "sample count must be within 1..=1024");
    }
    if (frame.sample_rate_hz == 0) raise("invalid-parameter", "sample rate must be positive");
    if (!(frame.gain_uv_per_lsb > 0.0f) || !std::isfinite(frame.gain_uv_per_lsb)) {
        raise("invalid-parameter", "gain must be positive and finite");
    }

    std::vector<std::uint8_t> buf;
    buf.reserve(frame.wire_size());
    buf.insert(buf.end(), kMagic, kMagic + 4);
    buf.push_back(frame.version);
    buf.push_back(frame.flags);
    buf.insert(buf.end(), frame.device_id.begin(), frame.device_id.end());
    buf.insert(buf.end(), frame.session_id.begin(), frame.session_id.end());
    put_u32(buf, frame.sequence_number);
    put_u16(buf, frame.sample_rate_hz);
    std::uint32_t gain_bits = 0;
    static_assert(sizeof(float) == 4);
    std::memcpy(&gain_bits, &frame.gain_uv_per_lsb, 4);
    put_u32(buf, gain_bits);
    put_u16(buf, static_cast<std::uint16_t>(frame.samples.size()));
    for (const std::int16_t s : frame.samples) {
        const std::uint16_t u = static_cast<std::uint16_t>(s);
        buf.push_back(static_cast<std::uint8_t>(u & 0xFF));
        buf.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    put_u32(buf, crc32(buf.data(), buf.size()));
    return buf;
}

TelemetryFrame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < TelemetryFrame::kHeaderBytes + 4) {
        raise("malformed-frame", "frame shorter than header");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        raise("malformed-frame", "bad magic");
    }
    const std::uint8_t version = bytes[4];
    if (version != TelemetryFrame::kVersion) {
        raise("version-error", "unsupported frame version " + std::to_string(version));
    }
    const std::uint16_t count = get_u16(bytes.data() + 32);
    if (count < 1 || count > TelemetryFrame::kMaxSamples) {
        raise("malformed-frame", "sample count out of range");
    }
    const std::size_t expected = TelemetryFrame::kHeaderBytes + 2u * count + 4u;
    if (bytes.size() != expected) {
        raise("malformed-frame", "frame length does not match sample count");
    }
    const std::uint32_t stored = get_u32(bytes.data() + expected - 4);
    if (crc32(bytes.data(), expected - 4) != stored) {
        raise("corrupt-frame", "CRC mismatch");
    }

    TelemetryFrame frame;
    frame.version = version;
    frame.flags = bytes[5];
    std::copy_n(bytes.data() + 6, 8, frame.device_id.begin());
    std::copy_n(bytes.data() + 14, 8, frame.session_id.begin());
    frame.sequence_number = get_u32(bytes.data() + 22);
    frame.sample_rate_hz = get_u16(bytes.data() + 26);
    const std::uint32_t gain_bits = get_u32(bytes.data() + 28);
    std::memcpy(&frame.gain_uv_per_lsb, &gain_bits, 4);
    frame.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        frame.samples[i] =
            static_cast<std::int16_t>(get_u16(bytes.data() + TelemetryFrame::kHeaderBytes + 2 * i));
    }
    return frame;
}

std::vector<TelemetryFrame> FrameScanner::feed(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
    std::vector<TelemetryFrame> frames;
    std::size_t pos = 0;

    auto remaining = [&] { return buffer_.size() - pos; };
    while (true) {
        // Locate the next magic.
        std::size_t found = std::string::npos;
        if (remaining() >= 4) {
            for (std::size_t i = pos; i + 4 <= buffer_.size(); ++i) {
                if (std::memcmp(buffer_.data() + i, kMagic, 4) == 0) {
                    found = i;
                    break;
                }
            }
        }
        if (found == std::string::npos) {
            // Keep at most 3 trailing bytes (a possible partial magic).
            const std::size_t keep = std::min<std::size_t>(3, remaining());
            bytes_skipped_ += remaining() - keep;
            pos = buffer_.size() - keep;
            break;
        }
        bytes_skipped_ += found - pos;
        pos = found;

        if (remaining() < TelemetryFrame::kHeaderBytes + 4) break;  // need more data
        const std::uint16_t count = get_u16(buffer_.data() + pos + 32);
        if (count < 1 || count > TelemetryFrame::kMaxSamples) {
            ++frames_rejected_;
            ++pos;  // resync one byte past this magic
            continue;
        }
        const std::size_t frame_len = TelemetryFrame::kHeaderBytes + 2u * count + 4u;
        if (remaining() < frame_len) break;  // need more data
        try {
            frames.push_back(
                decode_frame(std::span<const std::uint8_t>(buffer_.data() + pos, frame_len)));
            ++frames_decoded_;
            pos += frame_len;
        } catch (const Error&) {
            ++frames_rejected_;
            ++pos;
        }
    }

    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
    return frames;
}

FaultLog simulate_device(const EcgRecord& record, const DeviceOptions& options,
                         const std::function<void(std::span<const std::uint8_t>)>& sink) {
    record.validate();
    if (record.samples.empty()) raise("invalid-input", "record has no samples");
    if (options.chunk_samples < 1 || options.chunk_samples > TelemetryFrame::kMaxSamples) {
        raise("invalid-parameter", "chunk size must be within 1..=1024");
    }
    const std::uint16_t rate = options.sample_rate_hz
                                   ? options.sample_rate_hz
                                   : static_cast<std::uint16_t>(record.sample_rate_hz);
    if (rate == 0) raise("invalid-parameter", "sample rate must be positive");
    if (!(options.faults.drop_prob >= 0.0 && options.faults.drop_prob < 1.0) ||
        !(options.faults.corrupt_prob >= 0.0 && options.faults.corrupt_prob < 1.0)) {
        raise("invalid-parameter", "fault probabilities must be in [0, 1)");
    }

    const std::vector<std::int16_t> counts =
        quantize_samples(record.samples, options.gain_uv_per_lsb);
    Rng fault_rng(derive_seed(options.faults.seed, "device-faults"));

    FaultLog log;
    const std::size_t n_frames =
        (counts.size() + options.chunk_samples - 1) / options.chunk_samples;
    log.total_frames = static_cast<std::uint32_t>(n_frames);

    const auto start_time = std::chrono::steady_clock::now();
    std::size_t sent_samples = 0;

    for (std::size_t f = 0; f < n_frames; ++f) {
        TelemetryFrame frame;
        frame.device_id = options.device_id;
        frame.session_id = options.session_id;
        frame.sequence_number = static_cast<std::uint32_t>(f);
        frame.sample_rate_hz = rate;
        frame.gain_uv_per_lsb = options.gain_uv_per_lsb;
        if (f + 1 == n_frames) frame.flags |= TelemetryFrame::kFlagEndOfSession;
        const std::size_t begin = f * options.chunk_samples;
        const std::size_t end = std::min(counts.size(), begin + options.chunk_samples);
        frame.samples.assign(counts.begin() + static_cast<std::ptrdiff_t>(begin),
                             counts.begin() + static_cast<std::ptrdiff_t>(end));

        // Draw both fault decisions for every frame so the fault schedule
        // for frame k does not depend on earlier outcomes.
        const bool drop = fault_rng.next_double() < options.faults.drop_prob;
        const bool corrupt = fault_rng.next_double() < options.faults.corrupt_prob;

        if (options.pacing == Pacing::Realtime) {
            const auto due = start_time + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                              std::chrono::duration<double>(
                                                  static_cast<double>(sent_samples) / rate));
            std::this_thread::sleep_until(due);
        }
        sent_samples += frame.samples.size();

        if (drop) {
            log.dropped.push_back(frame.sequence_number);
            continue;
        }
        std::vector<std::uint8_t> bytes = encode_frame(frame);
        if (corrupt) {
            const std::size_t at = static_cast<std::size_t>(fault_rng.next_below(bytes.size()));
            bytes[at] ^= static_cast<std::uint8_t>(1 + fault_rng.next_below(255));
            log.corrupted.push_back(frame.sequence_number);
        }
        sink(std::span<const std::uint8_t>(bytes.data(), bytes.size()));
    }
    return log;
}

// --- TCP client -------------------------------------------------------------

TcpSink::TcpSink(const std::string& host, std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd_ < 0) raise("io-error", "socket: " + std::string(std::strerror(errno)));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(port);
    if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
        ::close(fd_);
        fd_ = -1;
        raise("invalid-parameter", "bad IPv4 address: " + host);
    }
    if (::connect(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        const std::string err = std::strerror(errno);
        ::close(fd_);
        fd_ = -1;
        raise("io-error", "connect to " + host + ":" + std::to_string(port) + ": " + err);
    }
}

TcpSink::~TcpSink() {
    if (fd_ >= 0) ::close(fd_);
}

void TcpSink::send(std::span<const std::uint8_t> bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
        const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) raise("io-error", "send: " + std::string(std::strerror(errno)));
        sent += static_cast<std::size_t>(n);
    }
}

// --- ingest service ---------------------------------------------------------

IngestService::IngestService(ServiceConfig config) : config_(std::move(config)) {}

IngestService::~IngestService() {
    try {
        stop();
    } catch (...) {
        // destructor must not throw
    }
}

void IngestService::start() {
    if (running_.load()) return;
    if (config_.storage_dir.empty()) raise("invalid-parameter", "storage directory required");
    std::filesystem::create_directories(config_.storage_dir);

    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) raise("io-error", "socket: " + std::string(std::strerror(errno)));
    const int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(config_.port);
    if (::inet_pton(AF_INET, config_.listen_address.c_str(), &addr.sin_addr) != 1) {
        raise("invalid-parameter", "bad IPv4 listen address: " + config_.listen_address);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        raise("io-error", "bind: " + std::string(std::strerror(errno)));
    }
    if (::listen(listen_fd_, 64) != 0) {
        raise("io-error", "listen: " + std::string(std::strerror(errno)));
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&bound), &len);
    port_ = ntohs(bound.sin_port);

    running_.store(true);
    accept_thread_ = std::thread([this] { accept_loop(); });
}

void IngestService::accept_loop() {
    while (running_.load()) {
        const int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) {
            if (!running_.load()) break;
            continue;
        }
        std::lock_guard<std::mutex> lock(mutex_);
        if (!running_.load() ||
            open_fds_.size() >= static_cast<std::size_t>(std::max(1, config_.max_sessions))) {
            ::close(fd);
            continue;
        }
        ++stats_.connections;
        open_fds_.push_back(fd);
        handlers_.emplace_back([this, fd] { handle_connection(fd); });
    }
}

void IngestService::handle_connection(int fd) {
    FrameScanner scanner;
    std::vector<std::uint8_t> chunk(16384);
    std::uint64_t decoded_before = 0, rejected_before = 0, skipped_before = 0;
    try {
        while (true) {
            const ssize_t n = ::recv(fd, chunk.data(), chunk.size(), 0);
            if (n <= 0) break;
            const auto frames = scanner.feed(
                std::span<const std::uint8_t>(chunk.data(), static_cast<std::size_t>(n)));
            if (!frames.empty() || scanner.frames_rejected() != rejected_before ||
                scanner.bytes_skipped() != skipped_before) {
                std::lock_guard<std::mutex> lock(mutex_);
                stats_.frames_accepted += scanner.frames_decoded() - decoded_before;
                stats_.frames_rejected += scanner.frames_rejected() - rejected_before;
                stats_.bytes_skipped += scanner.bytes_skipped() - skipped_before;
                decoded_before = scanner.frames_decoded();
                rejected_before = scanner.frames_rejected();
                skipped_before = scanner.bytes_skipped();
                for (const TelemetryFrame& frame : frames) {
                    const std::vector<std::uint8_t> bytes = encode_frame(frame);
                    append_frame(frame, std::span<const std::uint8_t>(bytes.data(), bytes.size()));
                }
            }
        }
    } catch (const std::exception&) {
        // Storage failures must not take the whole service down; drop the
        // connection and keep serving the others.
    }
    ::close(fd);
    std::lock_guard<std::mutex> lock(mutex_);
    open_fds_.erase(std::remove(open_fds_.begin(), open_fds_.end(), fd), open_fds_.end());
    // Refresh every sidecar this connection may have touched.
    for (auto& [key, session] : sessions_) finalize_session_locked(*session);
}

void IngestService::append_frame(const TelemetryFrame& frame, std::span<const std::uint8_t> bytes) {
    // Caller holds mutex_.
    const std::string key = id_to_hex(frame.session_id);
    auto it = sessions_.find(key);
    if (it == sessions_.end()) {
        auto session = std::make_unique<Session>();
        session->log_path = config_.storage_dir / (key + ".eclog");
        session->log.open(session->log_path, std::ios::binary | std::ios::app);
        if (!session->log) raise("io-error", "cannot open " + session->log_path.string());
        session->device_hex = id_to_hex(frame.device_id);
        session->sample_rate_hz = frame.sample_rate_hz;
        it = sessions_.emplace(key, std::move(session)).first;
        stats_.sessions = sessions_.size();
    }
    Session& s = *it->second;

    std::vector<std::uint8_t> rec;
    rec.reserve(4 + bytes.size());
    put_u32(rec, static_cast<std::uint32_t>(bytes.size()));
    rec.insert(rec.end(), bytes.begin(), bytes.end());
    s.log.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    s.log.flush();

    const std::uint32_t seq = frame.sequence_number;
    s.max_seq = std::max(s.max_seq, seq);
    ++s.frames;
    if (frame.end_of_session()) s.end_seen = true;

    // Merge seq into the interval set.
    auto next = s.ranges.upper_bound(seq);
    bool merged = false;
    if (next != s.ranges.begin()) {
        auto prev = std::prev(next);
        if (seq >= prev->first && seq <= prev->second) {
            merged = true;  // duplicate
        } else if (prev->second + 1 == seq) {
            prev->second = seq;
            merged = true;
            if (next != s.ranges.end() && next->first == seq + 1) {
                prev->second = next->second;
                s.ranges.erase(next);
            }
        }
    }
    if (!merged) {
        if (next != s.ranges.end() && next->first == seq + 1) {
            const std::uint32_t hi = next->second;
            s.ranges.erase(next);
            s.ranges[seq] = hi;
        } else {
            s.ranges[seq] = seq;
        }
    }

    if (frame.end_of_session()) finalize_session_locked(s);
}

void IngestService::finalize_session_locked(Session& s) {
    nlohmann::json ranges = nlohmann::json::array();
    for (const auto& [lo, hi] : s.ranges) ranges.push_back({lo, hi});
    nlohmann::json gaps = nlohmann::json::array();
    std::uint32_t cursor = 0;
    for (const auto& [lo, hi] : s.ranges) {
        if (lo > cursor) gaps.push_back({cursor, lo - 1});
        cursor = hi + 1;
    }
    const bool complete = s.end_seen && gaps.empty();
    const nlohmann::json sidecar = {
        {"session_id", s.log_path.stem().string()},
        {"device_id", s.device_hex},
        {"sample_rate_hz", s.sample_rate_hz},
        {"frames", s.frames},
        {"max_seq", s.max_seq},
        {"received_ranges", ranges},
        {"gaps", gaps},
        {"end_of_session_seen", s.end_seen},
        {"complete", complete},
    };
    std::ofstream out(s.log_path.string() + ".json", std::ios::trunc);
    if (out) out << sidecar.dump(2) << "\n";
}

void IngestService::stop() {
    if (!running_.exchange(false)) return;
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (const int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    std::vector<std::thread> handlers;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        handlers.swap(handlers_);
    }
    for (std::thread& t : handlers) {
        if (t.joinable()) t.join();
    }
    std::lock_guard<std::mutex> lock(mutex_);
    for (auto& [key, session] : sessions_) {
        finalize_session_locked(*session);
        session->log.close();
    }
}

ServiceStats IngestService::stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

// --- export ------------------------------------------------------------------

SessionExport export_session(const std::filesystem::path& eclog_path) {
    std::ifstream in(eclog_path, std::ios::binary);
    if (!in) raise("io-error", "cannot open " + eclog_path.string());
    std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

    std::map<std::uint32_t, TelemetryFrame> by_seq;
    std::size_t pos = 0;
    while (pos < buf.size()) {
        if (pos + 4 > buf.size()) raise("format-error", "truncated session log");
        const std::uint32_t len = get_u32(buf.data() + pos);
        pos += 4;
        if (len < TelemetryFrame::kHeaderBytes + 4 ||
            len > TelemetryFrame::kHeaderBytes + 2 * TelemetryFrame::kMaxSamples + 4 ||
            pos + len > buf.size()) {
            raise("format-error", "corrupt session log entry");
        }
        const TelemetryFrame frame =
            decode_frame(std::span<const std::uint8_t>(buf.data() + pos, len));
        pos += len;
        by_seq.emplace(frame.sequence_number, std::move(frame));  // first wins
    }
    if (by_seq.empty()) raise("empty-session", "session log holds no frames");

    SessionExport result;
    const TelemetryFrame& first = by_seq.begin()->second;
    result.record.record_id = id_to_hex(first.session_id);
    result.record.sample_rate_hz = first.sample_rate_hz;
    result.frames = by_seq.size();
    result.max_seq = by_seq.rbegin()->first;
    const std::size_t nominal_chunk = first.samples.size();

    std::uint32_t expected = 0;
    bool end_seen = false;
    for (const auto& [seq, frame] : by_seq) {
        if (frame.sample_rate_hz != first.sample_rate_hz) {
            raise("format-error", "inconsistent sample rate within one session");
        }
        if (seq > expected) {
            SessionGap gap;
            gap.first_seq = expected;
            gap.last_seq = seq - 1;
            gap.sample_offset = result.record.samples.size();
            gap.nominal_samples = static_cast<std::size_t>(seq - expected) * nominal_chunk;
            result.gaps.push_back(gap);
        }
        const std::vector<double> mv = dequantize_samples(frame.samples, frame.gain_uv_per_lsb);
        result.record.samples.insert(result.record.samples.end(), mv.begin(), mv.end());
        if (frame.end_of_session()) end_seen = true;
        expected = seq + 1;
    }
    result.complete = end_seen && result.gaps.empty();
    return result;
}

std::string id_to_hex(const std::array<std::uint8_t, 8>& id) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(16);
    for (const std::uint8_t b : id) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xF]);
    }
    return out;
}

std::array<std::uint8_t, 8> id_from_hex(const std::string& hex) {
    if (hex.size() != 16) raise("invalid-parameter", "identifier must be 16 hex digits");
    std::array<std::uint8_t, 8> id{};
    for (std::size_t i = 0; i < 8; ++i) {
        auto nibble = [&](char c) -> std::uint8_t {
            if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
            if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
            if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
            raise("invalid-parameter", "identifier must be 16 hex digits");
        };
        id[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
    }
    return id;
}

}  // namespace ecgmon
