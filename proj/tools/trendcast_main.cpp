#include <iostream>

int main() {
    std::cout << "trendcast (work in progress)\n";
    return 0;
}
