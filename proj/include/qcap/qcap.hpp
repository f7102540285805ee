#pragma once

#include "qcap/channel.hpp"
#include "qcap/channels.hpp"
#include "qcap/errors.hpp"
#include "qcap/information.hpp"
#include "qcap/io.hpp"
#include "qcap/line_search.hpp"
#include "qcap/matrix.hpp"
#include "qcap/optimizer.hpp"
#include "qcap/random.hpp"
