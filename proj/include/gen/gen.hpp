#pragma once

#include "gen/adam.hpp"
#include "gen/ball.hpp"
#include "gen/checkpoint.hpp"
#include "gen/common.hpp"
#include "gen/config.hpp"
#include "gen/config_json.hpp"
#include "gen/data.hpp"
#include "gen/generator.hpp"
#include "gen/metrics.hpp"
#include "gen/rff.hpp"
#include "gen/trainer.hpp"
