#pragma once

#include "gim/errors.hpp"
#include "gim/types.hpp"
#include "gim/value.hpp"
#include "gim/render.hpp"
#include "gim/vocabulary.hpp"
#include "gim/builtins.hpp"
#include "gim/program.hpp"
#include "gim/interpreter.hpp"
#include "gim/loader.hpp"
#include "gim/predicates.hpp"
#include "gim/enumerator.hpp"
#include "gim/session.hpp"
#include "gim/equivalence.hpp"
#include "gim/script.hpp"
#include "gim/service.hpp"
