#pragma once

#include "nowcast/almon.hpp"
#include "nowcast/archive.hpp"
#include "nowcast/calendar.hpp"
#include "nowcast/config.hpp"
#include "nowcast/csv.hpp"
#include "nowcast/errors.hpp"
#include "nowcast/eval.hpp"
#include "nowcast/panel.hpp"
#include "nowcast/panel_ls.hpp"
#include "nowcast/panel_qr.hpp"
#include "nowcast/pipeline.hpp"
#include "nowcast/skew_t.hpp"
#include "nowcast/store.hpp"
