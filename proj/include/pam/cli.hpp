#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pam/errors.hpp"

namespace pam {

// Flat key=value experiment configuration. Keys are validated against the
// experiment's declared parameter list; unknown keys are rejected.
struct ExperimentConfig {
    std::string experiment;
    std::map<std::string, std::string> values;

    void set(const std::string& key, const std::string& value) { values[key] = value; }
    bool has(const std::string& key) const { return values.count(key) != 0; }

    std::string require(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& key) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_uint(const std::string& key) const;
    std::uint64_t get_uint_or(const std::string& key, std::uint64_t fallback) const;

    std::uint64_t master_seed() const;  // required for stochastic experiments
    int workers() const;

    // canonical text: experiment line plus sorted key=value lines
    std::string canonical() const;
    std::uint64_t hash() const;  // FNV-1a of the canonical text

    // plain text file: key=value lines, '#' comments, blank lines ignored
    static ExperimentConfig from_file(const std::string& experiment,
                                      const std::string& path);
};

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

// locale-independent shortest-round-trip formatting, 17 significant digits
std::string format_double(double v);

// CSV serialization; throws IoError on any non-finite value
std::string to_csv(const Table& table);
void write_csv(const Table& table, const std::string& path);
Table read_csv(const std::string& path);
void write_json_table(const Table& table, const std::string& path);

struct RunManifest {
    std::string experiment;
    std::uint64_t config_hash = 0;
    std::uint64_t master_seed = 0;
    int workers = 1;
    double wall_seconds = 0;
    std::vector<std::string> outputs;
    std::map<std::string, std::uint64_t> warning_counts;
    std::vector<std::string> warnings;
    std::string payload_json;  // experiment-specific report, JSON text
};

void write_manifest(const RunManifest& manifest, const std::string& path);

// Dispatches the named experiment, writes <out_dir>/<experiment>.csv, .json
// and <experiment>_manifest.json. With verify=1 the experiment runs twice and
// a byte mismatch raises ReproducibilityError.
RunManifest run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

std::vector<std::string> experiment_names();

int cli_main(int argc, char** argv);

}  // namespace pam
