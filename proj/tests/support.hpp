#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "symscribe/annotate_service.hpp"
#include "symscribe/docmodel.hpp"
#include "symscribe/lexicon.hpp"
#include "symscribe/pipeline.hpp"

namespace symscribe::support {

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(std::string_view tag);

std::string data_path(std::string_view name);
const Lexicon& demo_lexicon();
PipelineConfig demo_config(const std::filesystem::path& output_dir, std::size_t workers = 1);

void write_text(const std::filesystem::path& path, std::string_view content);

// CSV (note_id,site_id,text) of n clinical-looking notes of roughly
// `approx_bytes` each, cycling over `sites` sites.
std::string synthetic_notes_csv(std::size_t n, std::size_t approx_bytes, std::uint64_t seed, std::size_t sites = 3);

// Arbitrary but well-formed output, including non-ASCII text and triggers.
PipelineOutput random_output(std::uint64_t seed);

// Synthetic session of n tasks over a handful of notes.
Session synthetic_session(std::size_t n, std::vector<std::string> annotators = {"ann1", "ann2"});

using RecordSets = std::vector<std::map<std::string, AnnotationRecord>>;

// Both annotators mark every task related and Present, except that the first
// `conflicts` tasks get a status conflict and the next `unrelated` tasks are
// marked unrelated by the second annotator.
RecordSets fixture_records(const Session& s, std::size_t conflicts, std::size_t unrelated);

// Runs `argv` (argv[0] is the executable), returning exit status plus the
// captured stdout and stderr.
struct ProcessResult {
  int status = -1;
  std::string out;
  std::string err;
};
ProcessResult run_process(const std::vector<std::string>& argv);

}  // namespace symscribe::support
