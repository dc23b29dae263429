#include "nest/checkpoint.hpp"

#include "nest/errors.hpp"
#include "nest/util.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>

namespace nest {

namespace {

void append_coords(std::ostringstream& os, const std::vector<double>& x) {
    for (double c : x) os << ' ' << format_double(c);
}

struct LineParser {
    std::istringstream in;
    explicit LineParser(const std::string& line) : in(line) {}

    std::string word() {
        std::string w;
        if (!(in >> w)) throw UsageError("checkpoint: truncated record");
        return w;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        if (!(in >> v)) throw UsageError("checkpoint: bad integer field");
        return v;
    }
    double real() {
        std::string w = word();
        if (w == "-inf") return -std::numeric_limits<double>::infinity();
        if (w == "inf") return std::numeric_limits<double>::infinity();
        char* end = nullptr;
        const double v = std::strtod(w.c_str(), &end);
        if (end != w.c_str() + w.size()) throw UsageError("checkpoint: bad real field");
        return v;
    }
    std::vector<double> reals(int n) {
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) out[i] = real();
        return out;
    }
    void expect_end() {
        std::string extra;
        if (in >> extra) throw UsageError("checkpoint: trailing fields in record");
    }
};

} // namespace

void CheckpointWriter::open_fresh(const std::string& path, const HeaderRecord& header) {
    path_ = path;
    out_.open(path, std::ios::out | std::ios::trunc);
    if (!out_) throw RunError("cannot open checkpoint for writing: " + path);
    std::ostringstream os;
    os << "H " << header.version << ' ' << header.config_hash << ' ' << header.config_json;
    write_line(os.str());
    flush();
}

void CheckpointWriter::open_append(const std::string& path) {
    path_ = path;
    out_.open(path, std::ios::out | std::ios::app);
    if (!out_) throw RunError("cannot reopen checkpoint for appending: " + path);
}

void CheckpointWriter::birth(const BirthEvent& e) {
    std::ostringstream os;
    os << "B " << e.id << ' ' << e.parent << ' ' << format_double(e.logl);
    append_coords(os, e.u);
    append_coords(os, e.v);
    write_line(os.str());
}

void CheckpointWriter::death(const DeathEvent& e) {
    std::ostringstream os;
    os << "D " << e.id << ' ' << e.parent << ' ' << format_double(e.logl) << ' ' << e.n_live
       << ' ' << format_double(e.logv);
    append_coords(os, e.u);
    append_coords(os, e.v);
    write_line(os.str());
}

void CheckpointWriter::snapshot(const SnapshotEvent& e) {
    std::ostringstream os;
    os << "S " << e.iteration << ' ' << e.mode << ' ' << e.rng_state << ' ' << e.n_proposals
       << ' ' << e.n_evals << ' ' << e.n_accepts;
    write_line(os.str());
}

void CheckpointWriter::finished(const FinishedEvent& e) {
    write_line("F " + e.reason);
    flush();
}

void CheckpointWriter::flush() {
    out_.flush();
    if (!out_) throw RunError("checkpoint write failed: " + path_);
}

void CheckpointWriter::write_line(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw RunError("checkpoint write failed: " + path_);
}

ParsedCheckpoint parse_checkpoint(const std::string& path, int dim) {
    std::ifstream in(path, std::ios::in);
    if (!in) throw UsageError("cannot open checkpoint: " + path);

    ParsedCheckpoint out;
    std::string line;
    std::streamoff offset = 0;
    bool have_header = false;
    std::size_t line_no = 0;

    while (true) {
        const std::streamoff line_start = offset;
        if (!std::getline(in, line)) break;
        const bool complete = !in.eof(); // getline strips '\n'; at eof the tail had none
        offset += static_cast<std::streamoff>(line.size()) + (complete ? 1 : 0);
        ++line_no;

        if (!complete) {
            out.dropped_partial_tail = true;
            break;
        }

        bool parsed = true;
        try {
            if (line.empty()) throw UsageError("checkpoint: empty record");
            LineParser p(line);
            const std::string tag = p.word();
            if (tag == "H") {
                HeaderRecord h;
                h.version = static_cast<int>(p.u64());
                h.config_hash = p.word();
                std::getline(p.in >> std::ws, h.config_json);
                if (h.config_json.empty()) throw UsageError("checkpoint: header missing config");
                if (line_no != 1) throw UsageError("checkpoint: header not first");
                out.header = h;
                have_header = true;
            } else if (tag == "B") {
                BirthEvent e;
                e.id = p.u64();
                e.parent = p.u64();
                e.logl = p.real();
                e.u = p.reals(dim);
                e.v = p.reals(dim);
                p.expect_end();
                out.events.push_back(e);
            } else if (tag == "D") {
                DeathEvent e;
                e.id = p.u64();
                e.parent = p.u64();
                e.logl = p.real();
                e.n_live = static_cast<std::uint32_t>(p.u64());
                e.logv = p.real();
                e.u = p.reals(dim);
                e.v = p.reals(dim);
                p.expect_end();
                out.events.push_back(e);
            } else if (tag == "S") {
                SnapshotEvent e;
                e.iteration = p.u64();
                e.mode = p.word();
                e.rng_state = p.word();
                e.n_proposals = p.u64();
                e.n_evals = p.u64();
                e.n_accepts = p.u64();
                p.expect_end();
                out.last_snapshot = out.events.size();
                out.last_snapshot_offset = line_start;
                out.events.push_back(e);
            } else if (tag == "F") {
                FinishedEvent e;
                e.reason = p.word();
                p.expect_end();
                out.events.push_back(e);
                out.finished = true;
            } else {
                throw UsageError("checkpoint: unknown record tag '" + tag + "'");
            }
        } catch (const UsageError&) {
            parsed = false;
        }

        if (!parsed) {
            // A malformed complete line is tolerable only at the very end of
            // the file (crash while appending, flushed without newline is
            // handled above; flushed garbage is not expected but a final bad
            // line is treated the same way).
            if (in.peek() == std::char_traits<char>::eof()) {
                out.dropped_partial_tail = true;
                break;
            }
            std::ostringstream os;
            os << "corrupt checkpoint record at line " << line_no << ": " << line.substr(0, 80);
            throw UsageError(os.str());
        }
    }

    if (!have_header) throw UsageError("checkpoint has no valid header: " + path);
    return out;
}

HeaderRecord read_checkpoint_header(const std::string& path) {
    std::ifstream in(path, std::ios::in);
    if (!in) throw UsageError("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw UsageError("checkpoint has no header: " + path);
    LineParser p(line);
    if (p.word() != "H") throw UsageError("checkpoint has no valid header: " + path);
    HeaderRecord h;
    h.version = static_cast<int>(p.u64());
    h.config_hash = p.word();
    std::getline(p.in >> std::ws, h.config_json);
    if (h.config_json.empty()) throw UsageError("checkpoint header missing config: " + path);
    return h;
}

void truncate_checkpoint(const std::string& path, std::streamoff offset) {
    std::error_code ec;
    std::filesystem::resize_file(path, static_cast<std::uintmax_t>(offset), ec);
    if (ec) throw RunError("cannot truncate checkpoint: " + path + ": " + ec.message());
}

} // namespace nest
