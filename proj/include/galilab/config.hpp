// config.hpp — plain-text sectioned key = value run configuration.
//
// Unknown keys are errors: every key in the file must be consumed by the
// command that runs it, and leftovers are reported with their line
// numbers.  Every run writes back a resolved-config echo so outputs are
// reproducible from their directory alone.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace galilab {

class RunConfig {
  public:
    static RunConfig from_file(const std::string& path);
    static RunConfig from_string(const std::string& text, const std::string& name = "<inline>");

    bool has(const std::string& section, const std::string& key) const;

    // required getters throw with the file/line when missing or malformed
    double get_double(const std::string& section, const std::string& key);
    double get_double(const std::string& section, const std::string& key, double fallback);
    long get_int(const std::string& section, const std::string& key);
    long get_int(const std::string& section, const std::string& key, long fallback);
    bool get_bool(const std::string& section, const std::string& key, bool fallback);
    std::string get_string(const std::string& section, const std::string& key);
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback);
    std::vector<double> get_double_list(const std::string& section, const std::string& key);
    std::vector<double> get_double_list(const std::string& section, const std::string& key,
                                        const std::vector<double>& fallback);

    // throws listing every unconsumed key with its line number
    void assert_all_consumed() const;

    // canonical echo of all entries, section-grouped
    std::string resolved_echo() const;

    const std::string& name() const { return name_; }

  private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool consumed = false;
    };
    std::string name_;
    // section -> key -> entry; std::map keeps the echo deterministic
    std::map<std::string, std::map<std::string, Entry>> data_;

    const Entry* find(const std::string& section, const std::string& key) const;
    const Entry& require(const std::string& section, const std::string& key) const;
};

}  // namespace galilab
