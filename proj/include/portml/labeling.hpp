#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "portml/ontology.hpp"

namespace portml::labeling {

// Task ids: "service", "dt1".."dt8".
extern const std::vector<std::string> kAllTasks;
extern const std::vector<std::string> kDwellTasks;

constexpr int64_t kServiceHorizonSeconds = 7 * 86400;

enum class Label : int8_t { negative = 0, positive = 1, undetermined = -1 };

struct LabelVector {
    std::string task_id;
    int64_t as_of = 0;
    std::unordered_map<std::string, Label> entries;
};

// floor of elapsed days: d < 2 -> 1, d in {2..7} -> d, d > 7 -> 8.
int dwell_category(int64_t arrival, int64_t exit);

// Positive iff a service event lies in [as_of, as_of + 7d); undetermined when
// the observed data horizon ends before the window does and no event was seen.
Label service_label(const ontology::OntologyStore& store, const std::string& container_id,
                    int64_t as_of, int64_t data_horizon);

// Dwell label for one task. Containers without an observed exit are
// undetermined, except that dt-tasks resolve once the horizon proves the
// container already dwelt past the task's day range.
Label dwell_task_label(const ontology::OntologyStore& store, const std::string& container_id,
                       int dt_index, int64_t data_horizon);

std::vector<LabelVector> build_labels(const ontology::OntologyStore& store,
                                      const std::vector<std::string>& cohort, int64_t as_of,
                                      const std::vector<std::string>& tasks,
                                      int64_t data_horizon);

bool is_dwell_task(const std::string& task_id);
int dwell_task_index(const std::string& task_id);  // "dt3" -> 3

}  // namespace portml::labeling
