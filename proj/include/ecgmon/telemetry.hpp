#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgmon/signal.hpp"

namespace ecgmon {

// One telemetry frame. Wire layout (all multi-byte fields little-endian):
//
//   offset  size  field
//   ------  ----  -----------------------------------------
//        0     4  magic "ECG1"
//        4     1  version (currently 1)
//        5     1  flags (bit 0: end of session)
//        6     8  device_id
//       14     8  session_id
//       22     4  sequence_number
//       26     2  sample_rate_hz
//       28     4  gain_uv_per_lsb (IEEE-754 binary32)
//       32     2  sample_count (1..=1024)
//       34  2*sc  samples (int16)
//   34+2*sc     4  CRC-32 over all preceding bytes
struct TelemetryFrame {
    static constexpr std::size_t kHeaderBytes = 34;
    static constexpr std::size_t kMaxSamples = 1024;
    static constexpr std::uint8_t kFlagEndOfSession = 0x01;
    static constexpr std::uint8_t kVersion = 1;

    std::uint8_t version = kVersion;
    std::uint8_t flags = 0;
    std::array<std::uint8_t, 8> device_id{};
    std::array<std::uint8_t, 8> session_id{};
    std::uint32_t sequence_number = 0;
    std::uint16_t sample_rate_hz = 0;
    float gain_uv_per_lsb = 1.0f;
    std::vector<std::int16_t> samples;

    std::size_t wire_size() const { return kHeaderBytes + 2 * samples.size() + 4; }
    bool end_of_session() const { return (flags & kFlagEndOfSession) != 0; }
};

// Millivolts -> ADC counts at `gain_uv_per_lsb` microvolts per count,
// rounded to nearest and saturated at the int16 range; and back.
std::vector<std::int16_t> quantize_samples(const std::vector<double>& millivolts,
                                           float gain_uv_per_lsb);
std::vector<double> dequantize_samples(const std::vector<std::int16_t>& counts,
                                       float gain_uv_per_lsb);

// Serializes a frame ("invalid-parameter" on bad field values).
std::vector<std::uint8_t> encode_frame(const TelemetryFrame& frame);

// Parses exactly one frame from `bytes` (the span must be the frame, whole
// and nothing else). Bad magic / impossible sizes raise "malformed-frame",
// an unknown version "version-error", a checksum failure "corrupt-frame".
TelemetryFrame decode_frame(std::span<const std::uint8_t> bytes);

// Incremental stream scanner: buffers arbitrary byte chunks, locates frames
// by magic scan, CRC-verifies them, and resynchronizes after garbage by
// advancing one byte past a failed magic.
class FrameScanner {
public:
    // Returns the frames completed by this chunk.
    std::vector<TelemetryFrame> feed(std::span<const std::uint8_t> bytes);

    std::uint64_t frames_decoded() const { return frames_decoded_; }
    std::uint64_t frames_rejected() const { return frames_rejected_; }
    std::uint64_t bytes_skipped() const { return bytes_skipped_; }

private:
    std::vector<std::uint8_t> buffer_;
    std::uint64_t frames_decoded_ = 0;
    std::uint64_t frames_rejected_ = 0;
    std::uint64_t bytes_skipped_ = 0;
};

enum class Pacing { MaxSpeed, Realtime };

struct FaultConfig {
    double drop_prob = 0.0;     // frame silently not sent
    double corrupt_prob = 0.0;  // one random byte flipped before sending
    std::uint64_t seed = 0;
};

struct DeviceOptions {
    std::array<std::uint8_t, 8> device_id{};
    std::array<std::uint8_t, 8> session_id{};
    std::uint16_t sample_rate_hz = 0;  // 0: take the record's rate
    float gain_uv_per_lsb = 4.0f;
    std::size_t chunk_samples = 256;
    Pacing pacing = Pacing::MaxSpeed;
    FaultConfig faults{};
};

// Ground truth of what the simulator actually did.
struct FaultLog {
    std::vector<std::uint32_t> dropped;
    std::vector<std::uint32_t> corrupted;
    std::uint32_t total_frames = 0;
};

// Splits a record into frames (the final frame carries the end-of-session
// flag), injects seeded faults, and hands each outgoing chunk to `sink`.
// Realtime pacing sleeps so that frames leave at the signal rate.
FaultLog simulate_device(const EcgRecord& record, const DeviceOptions& options,
                         const std::function<void(std::span<const std::uint8_t>)>& sink);

// Connects to host:port and returns a sink streaming into the socket; the
// connection closes when the returned holder is destroyed.
class TcpSink {
public:
    TcpSink(const std::string& host, std::uint16_t port);  // "io-error" on failure
    ~TcpSink();
    TcpSink(const TcpSink&) = delete;
    TcpSink& operator=(const TcpSink&) = delete;

    void send(std::span<const std::uint8_t> bytes);  // "io-error" on failure

private:
    int fd_ = -1;
};

struct ServiceConfig {
    std::string listen_address = "127.0.0.1";
    std::uint16_t port = 0;  // 0: pick an ephemeral port
    std::filesystem::path storage_dir;
    int max_sessions = 64;  // concurrent connection bound
};

struct ServiceStats {
    std::uint64_t connections = 0;
    std::uint64_t frames_accepted = 0;
    std::uint64_t frames_rejected = 0;
    std::uint64_t bytes_skipped = 0;
    std::uint64_t sessions = 0;
};

// Concurrent TCP ingestion: one scanner per connection, frames appended to
// per-session logs under storage_dir as "<session_id_hex>.eclog"
// (length-prefixed raw frames) with a "<session_id_hex>.eclog.json" index
// sidecar (sequence ranges, gaps, completeness).
class IngestService {
public:
    explicit IngestService(ServiceConfig config);
    ~IngestService();
    IngestService(const IngestService&) = delete;
    IngestService& operator=(const IngestService&) = delete;

    void start();  // binds and spawns the accept loop ("io-error" on failure)
    void stop();   // drains connections and finalizes all session sidecars

    std::uint16_t port() const { return port_; }
    ServiceStats stats() const;

private:
    struct Session {
        std::filesystem::path log_path;
        std::ofstream log;
        std::string device_hex;
        std::uint16_t sample_rate_hz = 0;
        std::map<std::uint32_t, std::uint32_t> ranges;  // merged [lo, hi] spans
        std::uint32_t max_seq = 0;
        std::uint64_t frames = 0;
        bool end_seen = false;
    };

    void accept_loop();
    void handle_connection(int fd);
    void append_frame(const TelemetryFrame& frame, std::span<const std::uint8_t> bytes);
    void finalize_session_locked(Session& session);

    ServiceConfig config_;
    std::uint16_t port_ = 0;
    int listen_fd_ = -1;
    std::atomic<bool> running_{false};
    std::thread accept_thread_;
    mutable std::mutex mutex_;
    std::vector<std::thread> handlers_;
    std::vector<int> open_fds_;
    std::map<std::string, std::unique_ptr<Session>> sessions_;
    ServiceStats stats_{};
};

struct SessionGap {
    std::uint32_t first_seq = 0;
    std::uint32_t last_seq = 0;
    std::size_t sample_offset = 0;    // position in the exported sample array
    std::size_t nominal_samples = 0;  // missing-frame count * nominal chunk
};

struct SessionExport {
    EcgRecord record;  // delivered samples only, ordered by sequence
    std::vector<SessionGap> gaps;
    bool complete = false;  // end-of-session seen and no gaps
    std::uint32_t max_seq = 0;
    std::uint64_t frames = 0;
};

// Reads a session log back into a record. Raises "empty-session" for a log
// with no frames, "format-error" for a damaged log.
SessionExport export_session(const std::filesystem::path& eclog_path);

// Hex helpers for 8-byte identifiers.
std::string id_to_hex(const std::array<std::uint8_t, 8>& id);
std::array<std::uint8_t, 8> id_from_hex(const std::string& hex);  // "invalid-parameter"

}  // namespace ecgmon
