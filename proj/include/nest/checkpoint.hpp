#pragma once

#include "nest/model.hpp"

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nest {

// Checkpoint file: line-delimited, one self-describing record per line,
// append-only, flushed once per iteration. Doubles are printed with 17
// significant digits so they round-trip bit-exactly.
//
//   H <version> <config-hash-hex> <config-json>
//   B <id> <parent> <logl> <u...> <v...>            node attached
//   D <id> <parent> <logl> <n_live> <logv> <u...> <v...>   node removed
//   S <iteration> <mode> <rng-state> <proposals> <evals> <accepts>
//   F <reason>                                      run complete
//
// Only the final line may be partial (a crash mid-append); any other
// malformed record means the file is corrupt.

struct HeaderRecord {
    int version = 1;
    std::string config_hash;
    std::string config_json;
};

struct BirthEvent {
    std::uint64_t id = 0;
    std::uint64_t parent = 0;
    double logl = 0.0;
    UnitPoint u;
    ParamPoint v;
};

struct DeathEvent {
    std::uint64_t id = 0;
    std::uint64_t parent = 0;
    double logl = 0.0;
    std::uint32_t n_live = 0;
    double logv = 0.0;
    UnitPoint u;
    ParamPoint v;
};

struct SnapshotEvent {
    std::uint64_t iteration = 0;
    std::string mode;
    std::string rng_state;
    std::uint64_t n_proposals = 0;
    std::uint64_t n_evals = 0;
    std::uint64_t n_accepts = 0;
};

struct FinishedEvent {
    std::string reason;
};

using CheckpointEvent = std::variant<BirthEvent, DeathEvent, SnapshotEvent, FinishedEvent>;

class CheckpointWriter {
public:
    /// Creates/truncates the file and writes the header.
    void open_fresh(const std::string& path, const HeaderRecord& header);
    /// Reopens an existing file for appending (after resume truncation).
    void open_append(const std::string& path);

    void birth(const BirthEvent& e);
    void death(const DeathEvent& e);
    void snapshot(const SnapshotEvent& e);
    void finished(const FinishedEvent& e);
    void flush();

private:
    void write_line(const std::string& line);
    std::ofstream out_;
    std::string path_;
};

struct ParsedCheckpoint {
    HeaderRecord header;
    std::vector<CheckpointEvent> events;
    /// Index into `events` of the last snapshot, if any.
    std::optional<std::size_t> last_snapshot;
    /// Byte offset of the start of the last snapshot's line.
    std::streamoff last_snapshot_offset = 0;
    bool finished = false;
    /// True when the file ended mid-record (the partial tail is dropped).
    bool dropped_partial_tail = false;
};

/// Parses a checkpoint. `dim` sizes the coordinate fields. Throws UsageError
/// on a missing/corrupt header or a malformed non-final record.
ParsedCheckpoint parse_checkpoint(const std::string& path, int dim);

/// Reads just the header line (used to learn the stored config before a
/// full parse).
HeaderRecord read_checkpoint_header(const std::string& path);

/// Cuts the file back to `offset` bytes (resume rolls back to the last
/// snapshot boundary and re-runs from there).
void truncate_checkpoint(const std::string& path, std::streamoff offset);

} // namespace nest
