#pragma once

#include "mmdlab/error.hpp"
#include "mmdlab/rational.hpp"
#include "mmdlab/pwa_map.hpp"
#include "mmdlab/parallel.hpp"
#include "mmdlab/separation.hpp"
#include "mmdlab/fbeta.hpp"
#include "mmdlab/horseshoe.hpp"
#include "mmdlab/surgery.hpp"
