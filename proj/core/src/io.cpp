#include "webdream/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace webdream {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(path, std::strerror(errno));
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError(path, "read failed");
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(path, std::strerror(errno));
        out << content;
        out.flush();
        if (!out) throw IoError(path, "write failed");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) throw IoError(path, std::strerror(errno));
}

nlohmann::json read_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path, std::string("invalid JSON: ") + e.what());
    }
}

std::vector<GeneratedTask> read_tasks_file(const std::string& path) {
    std::istringstream in(read_file(path));
    std::vector<GeneratedTask> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(generated_task_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            throw IoError(path, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_tasks_file(const std::string& path, const std::vector<GeneratedTask>& tasks) {
    std::string text;
    for (const auto& t : tasks) text += to_json(t).dump() + "\n";
    write_file(path, text);
}

RawCorpus read_corpus_file(const std::string& path) {
    std::istringstream in(read_file(path));
    try {
        return read_corpus(in);
    } catch (const std::exception& e) {
        throw IoError(path, e.what());
    }
}

void write_corpus_file(const std::string& path, const TransitionCorpus& corpus) {
    std::ostringstream out;
    write_corpus(out, corpus);
    write_file(path, out.str());
}

}  // namespace webdream
