#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "webdream/corpus.hpp"
#include "webdream/task.hpp"

namespace webdream {

/// File-system failure with the offending path in the message.
class IoError : public std::runtime_error {
public:
    IoError(const std::string& path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

std::string read_file(const std::string& path);
/// Writes to path + ".tmp", then renames over path.
void write_file(const std::string& path, const std::string& content);
nlohmann::json read_json_file(const std::string& path);

std::vector<GeneratedTask> read_tasks_file(const std::string& path);
void write_tasks_file(const std::string& path, const std::vector<GeneratedTask>& tasks);

RawCorpus read_corpus_file(const std::string& path);
void write_corpus_file(const std::string& path, const TransitionCorpus& corpus);

}  // namespace webdream
