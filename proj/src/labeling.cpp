#include "portml/labeling.hpp"

#include <stdexcept>

namespace portml::labeling {

const std::vector<std::string> kAllTasks = {"service", "dt1", "dt2", "dt3", "dt4",
                                            "dt5",     "dt6", "dt7", "dt8"};
const std::vector<std::string> kDwellTasks = {"dt1", "dt2", "dt3", "dt4",
                                              "dt5", "dt6", "dt7", "dt8"};

bool is_dwell_task(const std::string& task_id) {
    return task_id.size() == 3 && task_id[0] == 'd' && task_id[1] == 't' &&
           task_id[2] >= '1' && task_id[2] <= '8';
}

int dwell_task_index(const std::string& task_id) {
    if (!is_dwell_task(task_id)) throw std::invalid_argument("not a dwell task: " + task_id);
    return task_id[2] - '0';
}

int dwell_category(int64_t arrival, int64_t exit) {
    if (exit <= arrival) throw std::invalid_argument("exit must follow arrival");
    int64_t d = (exit - arrival) / 86400;
    if (d < 2) return 1;
    if (d <= 7) return static_cast<int>(d);
    return 8;
}

namespace {

struct ArrivalExit {
    bool have_arrival = false, have_exit = false;
    int64_t arrival = 0, exit = 0;
};

ArrivalExit find_arrival_exit(const ontology::OntologyStore& store,
                              const std::string& container_id) {
    ArrivalExit ae;
    for (const auto& e : store.all_events(container_id)) {
        if (e.kind == ontology::EventKind::arrival && !ae.have_arrival) {
            ae.have_arrival = true;
            ae.arrival = e.at;
        } else if (e.kind == ontology::EventKind::exit && !ae.have_exit) {
            ae.have_exit = true;
            ae.exit = e.at;
        }
    }
    return ae;
}

}  // namespace

Label service_label(const ontology::OntologyStore& store, const std::string& container_id,
                    int64_t as_of, int64_t data_horizon) {
    if (!store.has(container_id))
        throw std::out_of_range("unknown container: " + container_id);
    int64_t window_end = as_of + kServiceHorizonSeconds;
    for (const auto& e : store.all_events(container_id)) {
        if (e.kind == ontology::EventKind::service && e.at >= as_of && e.at < window_end)
            return Label::positive;
    }
    if (data_horizon < window_end) return Label::undetermined;
    return Label::negative;
}

Label dwell_task_label(const ontology::OntologyStore& store, const std::string& container_id,
                       int dt_index, int64_t data_horizon) {
    if (!store.has(container_id))
        throw std::out_of_range("unknown container: " + container_id);
    auto ae = find_arrival_exit(store, container_id);
    if (!ae.have_arrival) return Label::undetermined;
    if (ae.have_exit) {
        int cat = dwell_category(ae.arrival, ae.exit);
        return cat == dt_index ? Label::positive : Label::negative;
    }
    // No exit observed. If the horizon already proves more than 7 elapsed
    // days, the category is settled as dt8.
    int64_t elapsed_days = (data_horizon - ae.arrival) / 86400;
    if (elapsed_days >= 8) return dt_index == 8 ? Label::positive : Label::negative;
    return Label::undetermined;
}

std::vector<LabelVector> build_labels(const ontology::OntologyStore& store,
                                      const std::vector<std::string>& cohort, int64_t as_of,
                                      const std::vector<std::string>& tasks,
                                      int64_t data_horizon) {
    std::vector<LabelVector> out;
    out.reserve(tasks.size());
    for (const auto& task : tasks) {
        LabelVector lv;
        lv.task_id = task;
        lv.as_of = as_of;
        for (const auto& id : cohort) {
            Label l = task == "service"
                          ? service_label(store, id, as_of, data_horizon)
                          : dwell_task_label(store, id, dwell_task_index(task), data_horizon);
            lv.entries.emplace(id, l);
        }
        out.push_back(std::move(lv));
    }
    return out;
}

}  // namespace portml::labeling
