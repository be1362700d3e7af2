#include <iostream>

#include "spiti/problems.hpp"

// Writes the bundled problem files. Usage: spiti_gen_problems <dir>
int main(int argc, char** argv) {
  std::string dir = argc > 1 ? argv[1] : "problems";
  spiti::save_problem(spiti::make_coffee_robot(), dir + "/coffee_robot.json");
  spiti::save_problem(spiti::make_process_planning(), dir + "/process_planning.json");
  std::cout << "wrote " << dir << "/coffee_robot.json and " << dir
            << "/process_planning.json\n";
  return 0;
}
